"""Scale-invariant multivariate Gini inequality indices.

The index of order p whitens a random vector with a scale stable whitening
transform (correlation whitening by default) and evaluates the expected
p-norm of the whitened difference of two independent draws, normalized by
twice the p-norm of the whitened mean.  For p = 1 it decomposes exactly
into a convex combination of one-dimensional Gini indices of the whitened
components.

Quick start::

    from multigini import WeightedSample, gini_1_decomposed

    sample = WeightedSample(points)          # n x d matrix, optional weights
    result = gini_1_decomposed(sample)
    result.value, result.weights, result.component_ginis

The ``multigini`` CLI exposes the same machinery on CSV panels, including a
``verify`` subcommand running the bundled fixture and property checks.
"""

from .errors import DataError, NegativityWarning, NumericalError
from .gini import (
    GiniResult,
    gaussian_g1_closed_form,
    gini_1d,
    gini_1_decomposed,
    gini_p,
    mahalanobis_norm_p,
)
from .report import (
    CompanyRecord,
    InequalityReport,
    PanelSet,
    build_report,
    load_csv,
    panelize,
    serialize_report,
)
from .sample import (
    EigenDecomposition,
    MomentSummary,
    WeightedSample,
    cholesky_lower,
    moments,
    sym_eigen,
)
from .synth import (
    Fixture,
    brute_force_gini_1d,
    brute_force_gini_p,
    gen_coinflip_cube,
    gen_gaussian,
    gen_spike_cube,
    pca_instability_fixture,
    write_sample_csv,
)
from .whitening import (
    WhiteningTransform,
    fit_cholesky,
    fit_pca,
    fit_whitening,
    fit_zca,
    fit_zca_cor,
    scale_stability_check,
)

__version__ = "0.1.0"

__all__ = [
    "CompanyRecord",
    "DataError",
    "EigenDecomposition",
    "Fixture",
    "GiniResult",
    "InequalityReport",
    "MomentSummary",
    "NegativityWarning",
    "NumericalError",
    "PanelSet",
    "WeightedSample",
    "WhiteningTransform",
    "brute_force_gini_1d",
    "brute_force_gini_p",
    "build_report",
    "cholesky_lower",
    "fit_cholesky",
    "fit_pca",
    "fit_whitening",
    "fit_zca",
    "fit_zca_cor",
    "gaussian_g1_closed_form",
    "gen_coinflip_cube",
    "gen_gaussian",
    "gen_spike_cube",
    "gini_1d",
    "gini_1_decomposed",
    "gini_p",
    "load_csv",
    "mahalanobis_norm_p",
    "moments",
    "panelize",
    "pca_instability_fixture",
    "scale_stability_check",
    "serialize_report",
    "sym_eigen",
    "write_sample_csv",
]
