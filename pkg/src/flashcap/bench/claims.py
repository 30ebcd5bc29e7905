"""Registry of the quantitative claims the bench certifies.

Every report's anchor must name one entry here; a coverage test enforces
the closure so no check can drift away from a registered claim.
"""

CLAIMS = {
    "gaussian-tv-variance-mismatch": (
        "L1 distance between same-mean Gaussians is at most "
        "|s1^2 - s2^2| min(s1^2, s2^2) / (s1^2 s2^2)"
    ),
    "gaussian-tv-second-moment": (
        "second-moment-weighted L1 distance between same-mean Gaussians "
        "is at most 3 |s1^2 - s2^2|"
    ),
    "output-moment-bound": (
        "E|Y_n|^beta <= m2 and E[Y_n^2] <= m3 uniformly in n and in the "
        "input sequence"
    ),
    "output-entropy-band": (
        "per-symbol output entropy lies in [log(2 pi e)/2, log(2 pi e m3)/2]"
    ),
    "state-forgetting-tv": (
        "TV between g-step conditional output densities from two resumed "
        "outputs decays like sb2^g (y^2 + y'^2)"
    ),
    "state-forgetting-weighted-tv": (
        "second-moment-weighted TV from two resumed outputs decays like "
        "3 sb2^g (y^2 + y'^2)"
    ),
    "restart-forgetting-tv": (
        "TV between fresh-start and resumed-state output densities after "
        "g steps is at most sb2^g (sa2 x^2 + 2 sb2 (y^2 + se2))"
    ),
    "history-truncation-tv": (
        "TV between full-history and k-truncated-history conditional output "
        "densities is at most sb2^k (2 sa2 x^2 + 2 sb2 (2 m3 + 2 se2))"
    ),
    "step-logdensity-envelope": (
        "0 >= log one-step marginal-history density >= -(m4 + m5 y^2) for "
        "|y_prev| <= m_tilde"
    ),
    "window-logdensity-envelope": (
        "0 >= log joint output density of an L-window >= -(L m6 + m7 sum y_i^2)"
    ),
    "marginal-convergence-geometric": (
        "consecutive output marginals approach each other in L1 at rate "
        "(sa2 m0^2 + 2 sb2 (m3 + se2)) sb2^k"
    ),
    "path-logdensity-concentration": (
        "the per-symbol path log-density statistics concentrate as the "
        "trajectory length grows, with means converging"
    ),
    "restart-mi-gap-bound": (
        "|block MI - resumed-state conditional block MI| <= 2 (k+1) log M "
        "+ (n-k) (sa2 x^2 + 2 sb2 (y^2 + se2)) sb2^k log M"
    ),
    "window-mi-gap-bound": (
        "per-symbol MI of shifted length-(n+1) windows differs by at most "
        "the composite m4..m9 envelope with geometric sb2^k decay"
    ),
}
