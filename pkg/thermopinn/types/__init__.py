from .fields import Point2, FieldState, Jet, FieldJet2, FIELD_NAMES
from .flow import FlowParameters, DomainSpec
from .network import MLPArchitecture, ParameterVector
from .residuals import ResidualBreakdown
from .collocation import CollocationSet
from .reports import ErrorReport, FieldErrors, ConvergenceFit
from .training import TrainConfig, EpochRecord, TrainingHistory
