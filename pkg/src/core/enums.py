from enum import Enum


class NoiseFamily(str, Enum):
    SUBWEIBULL = "subweibull"
    POLYTAIL_STUDENT = "polytail-student"
    POLYTAIL_PARETO = "polytail-pareto"
    WEAK_MOMENT_SPHERICAL = "weak-moment-spherical"
    ADVERSARIAL_D = "adversarial-D"
    GAUSSIAN = "gaussian"


class AdversarialClaim(str, Enum):
    III = "iii"
    IV = "iv"
    V = "v"
    G2_TWO_POINT = "G2-two-point"


class SignalKind(str, Enum):
    NULL = "null"
    SINGLE_CHANGE = "single-change"
    MULTI_CHANGE = "multi-change"


class TestId(str, Enum):
    DENSE_G = "dense-G"
    SPARSE_G = "sparse-G"
    GAUSSIAN_COMBINED = "gaussian-combined"
    DENSE_P = "dense-P"
    SPARSE_P_MOM = "sparse-P-mom"
    SPARSE_P_RSM = "sparse-P-rsm"
    SPARSE_P_COMBINED = "sparse-P-combined"
    ADAPTIVE = "adaptive"
    MULTI = "multi"
    TEMPORAL = "temporal"
    RESTRICTED_P = "restricted-P"
    RESTRICTED_G = "restricted-G"
    WEAK_MOMENT = "weak-moment"

    __test__ = False


class GridKind(str, Enum):
    SINGLE = "single"
    MULTI = "multi"
    RESTRICTED = "restricted"


class Provenance(str, Enum):
    THEORY = "theory-with-constants"
    CALIBRATED = "calibrated"


class RobustStrategy(str, Enum):
    SHORTEST_INTERVAL = "shortest-interval"
    MEDIAN_OF_MEANS = "median-of-means"
    TRIMMED_MEAN = "trimmed-mean"


class RsmMode(str, Enum):
    EXACT_SMALL = "exact-small"
    SUBGRADIENT = "subgradient"


class SecondMomentKind(str, Enum):
    KNOWN = "known"
    MA1_PLUGIN = "ma1-plugin"


class RateFamily(str, Enum):
    SUBWEIBULL = "subweibull"
    POLYTAIL = "polytail"
    GAUSSIAN = "gaussian"
    WEAK_MOMENT = "weak-moment"


class RateRegime(str, Enum):
    DENSE_U = "dense-U"
    SPARSE_U = "sparse-U"
    SPARSE_MOM_U = "sparse-mom-U"
    COMBINED_U = "combined-U"
    RESTRICTED_U = "restricted-U"
    MULTI_U = "multi-U"
    TEMPORAL_U = "temporal-U"
    LOWER = "lower"
    MULTI_L = "multi-L"
    GAUSSIAN_STAR = "gaussian-star"


class Curve(str, Enum):
    GAMMA = "gamma"
    BETA = "beta"
