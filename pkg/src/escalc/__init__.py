"""Allen, Hicks, Morishima and gross elasticities of substitution.

Primal measures come from bordered-Hessian cofactors of a production
function; dual measures from a numerically solved (or closed-form) cost or
profit function. The two routes to the Allen elasticity agree for smooth
nonhomogeneous functions, which :func:`escalc.casebook.verify_uzawa`
checks point by point.
"""

from .bmatrix import (BorderedMatrix, bordered_hessian, cofactor, determinant,
                      leading_principal_minors, multi_bordered, scaled_border_det)
from .duality import (CostSolution, PriceOutput, blackorby_cost, canonical_problem,
                      dx_dp_cofactor, hes_cost, mes, mes_alt, price_elasticity, sensitivity,
                      solve_cost_min, uzawa_aes)
from .elasticity import (ElasticityReport, aes_matrix, hes_determinant, hes_homogeneous,
                         hes_log_derivative, isoquant_curvature)
from .errors import EscalcError
from .prodfn import (CES, CobbDouglas, DiffBundle, Homothetic, NestedMin, QuadraticConcave,
                     ShiftedCobbDouglas, check_smoothness, differentiate, evaluate,
                     fd_differentiate, homogeneity_degree, load_spec, spec_from_dict,
                     spec_to_dict)
from .profit import ProfitSolution, hles, mges, solve_profit_max

__version__ = "0.1.0"
