from .optics import (
    AnalyzerSetting,
    ArmEfficiency,
    BellState,
    BiphotonState,
    ComplexAmplitude,
    FringeMode,
    FringeScan,
    Transmittance,
)
from .bell import (
    ChConfiguration,
    ChCountResult,
    ChForm,
    ChResult,
    LoopholeMap,
    OptimizationResult,
    OptimizerSettings,
    RateModel,
)
from .lhv import CasadoParameters, ExclusionVerdict, RateBound, Verdict
from .calibration import BiasRow, CalibrationCounts, CalibrationResult, CalibrationScenario
from .slits import ChiSquareResult, CountData, DetectorPlane, JointPattern, PatternModel, Slit, SlitGeometry
from .qkd import (
    ChannelReport,
    DetectionEvent,
    DisturbanceResult,
    Dof,
    DoubleEntangledState,
    EveKind,
    EveStrategy,
    InformationMetric,
    MeasurementDistribution,
    ObserverPolicy,
    ObserverSettings,
    PolBasis,
    ProtocolRun,
    PumpPathState,
    RoundRecord,
    TimeSlot,
)
from .report import Discrepancy, FigureCheck, ReproductionRun, RunStatus, Severity
from .config import ExperimentConfig
