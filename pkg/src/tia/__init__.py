"""Mechanical screening of tubular topological interlocking assemblies.

Modules
-------
geometry
    Parametric sine and hexagon-based blocks, hexahedral meshes, assemblies.
contact
    Face-pair detection, gap function and the contact Jacobian.
statics
    Kinematic classification LPs, minimum-norm contact forces, explosion test.
loads
    Generalized loads of the pipe, tunnel, pillar, beam and shaft cases.
metrics
    Participation ratio and the contact-pressure measures.
pipeline, cli
    Single evaluations, parameter sweeps and the ``tia`` command.
mesh_io
    OBJ / legacy VTK surface export and re-import.
"""

__version__ = "0.1.0"

from .geometry import (  # noqa: E402
    Assembly,
    BlockMesh,
    Body,
    HexBlockParams,
    MeshResolution,
    SineBlockParams,
    block_length,
    build_assembly,
    build_hex_assembly,
    build_planar_sine_block,
    map_to_cylinder,
    sine_offset,
)
from .contact import ContactJacobian, ContactPair, assemble_jacobian, detect_contacts, gap, rotation  # noqa: E402
from .loads import GeneralizedLoad, LoadCase, assemble_load  # noqa: E402
from .metrics import (  # noqa: E402
    MetricsReport,
    PressureField,
    effective_area_percent,
    effective_mask,
    effective_mean_pressure,
    max_mean_pressure,
    participation_ratio,
)
from .statics import (  # noqa: E402
    EquilibriumReport,
    KinematicReport,
    classify,
    explosion_check,
    kinematic_feasibility,
    mechanism_activation,
    mechanism_suppression,
    solve_contact_forces,
)

__all__ = [
    "Assembly", "BlockMesh", "Body", "HexBlockParams", "MeshResolution", "SineBlockParams",
    "block_length", "build_assembly", "build_hex_assembly", "build_planar_sine_block",
    "map_to_cylinder", "sine_offset",
    "ContactJacobian", "ContactPair", "assemble_jacobian", "detect_contacts", "gap", "rotation",
    "GeneralizedLoad", "LoadCase", "assemble_load",
    "MetricsReport", "PressureField", "effective_area_percent", "effective_mask",
    "effective_mean_pressure", "max_mean_pressure", "participation_ratio",
    "EquilibriumReport", "KinematicReport", "classify", "explosion_check",
    "kinematic_feasibility", "mechanism_activation", "mechanism_suppression",
    "solve_contact_forces",
]
