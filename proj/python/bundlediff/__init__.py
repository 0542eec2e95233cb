"""Python interface to the bundlediff C++ core."""
from _bundlediff import (  # noqa: F401
    ModelParams,
    make_model,
    geometry_report,
    metric_block,
    semigroup_on_bump,
    girsanov_residual,
    operator_identity_residual,
    verify,
)
