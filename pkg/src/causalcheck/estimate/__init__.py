from .estimators import (ESTIMATORS, BackdoorRegression, EffectEstimate, EffectEstimator,
                         FrontdoorTwoStage, IVWald, PropensityWeighting, WeakInstrumentWarning,
                         compatible_methods, estimate_backdoor_regression, estimate_frontdoor,
                         estimate_iv_wald, estimate_propensity_weighting)
from .kernels import (CollinearityError, EstimationError, LinearFit, LogisticFit, logistic_fit,
                      logistic_gradient, logistic_loglik, ols_fit)

__all__ = [
    "ESTIMATORS", "BackdoorRegression", "CollinearityError", "EffectEstimate", "EffectEstimator",
    "EstimationError", "FrontdoorTwoStage", "IVWald", "LinearFit", "LogisticFit",
    "PropensityWeighting", "WeakInstrumentWarning", "compatible_methods",
    "estimate_backdoor_regression", "estimate_frontdoor", "estimate_iv_wald",
    "estimate_propensity_weighting", "logistic_fit", "logistic_gradient", "logistic_loglik", "ols_fit",
]
