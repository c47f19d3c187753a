"""Virtual stenting toolkit: analytic stent fields, vessel mesh deformation,
geometric metrics, polydata I/O, batch automation and an interactive session
service.
"""

from .mesh import Aabb, TriMesh, ValidityReport, check_validity
from .sdf import CapsuleSegment, StentField
from .centerline import AxisSelection, CenterlinePath, CenterlineTree, StentAxis
from .deform import DeploymentParams, DeploymentReport, DeploymentSession, StepRecord, deploy
from .metrics import DiameterSummary, ProfileSample

__version__ = "0.1.0"

__all__ = [
    "Aabb",
    "AxisSelection",
    "CapsuleSegment",
    "CenterlinePath",
    "CenterlineTree",
    "DeploymentParams",
    "DeploymentReport",
    "DeploymentSession",
    "DiameterSummary",
    "ProfileSample",
    "StentAxis",
    "StentField",
    "StepRecord",
    "TriMesh",
    "ValidityReport",
    "check_validity",
    "deploy",
]
