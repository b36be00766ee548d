"""Activated random walk on the line through per-site instruction stacks."""

from .checks import (AbelianReport, MonotoneReport, Trajectory, check_abelian, check_monotone,
                     perturb, stabilize_timed, terminal_signatures)
from .engine import DEFAULT_STEP_CAP, RunResult, drive, run_schedule, stabilize
from .scan import SCAN_COLUMNS, ScanRow, ScanTable, SlopeFit, drift_slope, fixation_scan
from .stacks import (EXHAUSTED, LEFT, RIGHT, SLEEP, ExplicitStacks, InsertedSleep, JumpsOnly,
                     RandomStacks, Reflected, Stacks, TrapStacks, factorize, instruction_code,
                     instruction_name, unfactorize)
from .state import (ArwState, InsertSleep, LabelPolicy, PassifyParticle, RemoveParticle,
                    apply_step, init_state, step)
from .traps import (BIASED_RIGHT, SYMMETRIC, Certification, SweepResult, TrapCertificate,
                    build_traps, certify, choose_K, escape_radius, replay_certificate, sweep)
