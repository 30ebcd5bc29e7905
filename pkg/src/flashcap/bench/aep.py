"""Concentration of the per-symbol path log-density statistics.

Along an increasing schedule of trajectory lengths the across-trajectory
spread of -(1/(n+1)) log f(Y_0^n) must shrink and the means of successive
lengths must agree within combined error bars, for both the output-only
and the joint statistics.  A memoryless control channel (single level,
no interference) adds a quantitative rate: its statistic is an i.i.d.
average, so the log-log slope of spread against length sits near -1/2.
"""

from __future__ import annotations

import math

import numpy as np

from ..inputs import IIDInput, InputModel, uniform_iid
from ..params import ChannelParams, validate_params
from ..rates import trajectory_statistics
from .report import ReportTimer, VerificationReport


def check_aep_convergence(
    params: ChannelParams,
    model: InputModel | None = None,
    schedule=(1000, 4000, 16000, 64000),
    batches: int = 16,
    seed: int = 0,
    include_control: bool = True,
    control_batches: int = 64,
    slope_band: tuple[float, float] = (0.4, 0.6),
    workers: int = 1,
) -> VerificationReport:
    timer = ReportTimer("path_logdensity_concentration", "path-logdensity-concentration")
    if model is None:
        model = uniform_iid(params.num_levels)
    spreads = {"h_y": [], "h_xy": []}
    means = {"h_y": [], "h_xy": []}
    for n in schedule:
        stats = trajectory_statistics(params, model, n, batches, seed, workers=workers)
        for key in ("h_y", "h_xy"):
            vals = stats[key]
            spreads[key].append(float(vals.std(ddof=1)))
            means[key].append(
                (float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(batches)))
            )
    for key in ("h_y", "h_xy"):
        for i in range(len(schedule) - 1):
            timer.add(
                f"{key} spread decreases {schedule[i]}->{schedule[i + 1]}",
                spreads[key][i + 1], spreads[key][i], 0.0,
            )
            m0, s0 = means[key][i]
            m1, s1 = means[key][i + 1]
            timer.add(
                f"{key} means agree {schedule[i]}->{schedule[i + 1]}",
                abs(m1 - m0), 0.0, 3.0 * math.hypot(s0, s1),
            )

    if include_control:
        control = validate_params(
            sigma_a2=0.0, sigma_b2=0.0, sigma_e2=params.sigma_e2,
            alpha1=params.alpha1, alpha2=params.alpha2, levels=[params.levels[0]],
        )
        cmodel = IIDInput(probs=(1.0,))
        cspread = []
        for n in schedule:
            stats = trajectory_statistics(
                control, cmodel, n, control_batches, seed, workers=workers
            )
            cspread.append(float(stats["h_y"].std(ddof=1)))
        logn = np.log(np.asarray(schedule, dtype=float))
        logs = np.log(np.asarray(cspread))
        slope = -float(np.polyfit(logn, logs, 1)[0])
        timer.add("control slope upper", slope, slope_band[1], 0.0, slope=slope)
        timer.add("control slope lower", -slope, -slope_band[0], 0.0, slope=slope)
    return timer.finish()
