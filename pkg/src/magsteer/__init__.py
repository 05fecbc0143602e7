"""magsteer: multi-coil magnetic field modeling, microrobot actuation,
overdamped robot dynamics and a remotely operable control service."""

from .actuation import (
    ActuationCommand,
    CoilCurrents,
    FieldPerAmpMatrix,
    Mode,
    ModeMismatchError,
    UnreachableFieldError,
    command_currents,
    field_per_amp_matrix,
    field_to_currents,
    orient_command,
    orient_currents,
    roll_command,
    rolling_waveform,
    rotation_axis,
    spin_command,
    stop_command,
    tweezer_command,
    tweezer_currents,
    vibrate_command,
    vibrate_currents,
    zero_currents,
)
from .assemblies import (
    BUILTIN_KINDS,
    assembly_from_config,
    build_helmholtz_assembly,
    build_tweezer_assembly,
    build_twod_assembly,
    load_assembly,
    make_builtin_assembly,
)
from .coils import (
    Channel,
    ChannelPair,
    CoilAssembly,
    CoreDomainError,
    CurrentLoop,
    FieldMap,
    PoleSpec,
    SingularityError,
    SolenoidSpec,
    UnsatisfiableCalibrationError,
    assembly_field,
    calibrate_channel,
    field_gradient,
    field_map,
    loop_axial_field,
    loop_field,
    pole_field,
    solenoid_axial_field,
    solenoid_field,
)
from .dynamics import (
    AssemblyFieldSource,
    Environment,
    RobotState,
    SimConfig,
    StepSizeError,
    UniformFieldSource,
    export_trajectory,
    magnetic_force,
    magnetic_torque,
    run,
    step,
)
from .hardware import (
    DriveFrame,
    DriveSignal,
    DriverLimits,
    HardwareBackend,
    SimulatedBackend,
    currents_to_drive,
)
from .protocol import (
    ProtocolError,
    ProtocolMessage,
    TelemetryRecord,
    format_command,
    format_telemetry,
    message_to_command,
    parse_command,
    parse_telemetry,
)
from .service import (
    ControlLoop,
    ControlServer,
    EmbeddedSim,
    ServiceConfig,
    SessionState,
    SimSettings,
    apply_message,
    load_service_config,
    serve,
)

__version__ = "0.1.0"
