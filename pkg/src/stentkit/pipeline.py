"""End-to-end deployment runs shared by the CLI, the batch driver and the
interactive service, so every entry point produces identical bytes for
identical inputs."""

from __future__ import annotations

from dataclasses import dataclass

from .centerline import (
    DEFAULT_SEGMENT_LENGTH,
    AxisSelection,
    CenterlineTree,
    StentAxis,
    apply_foreshortening,
    extract_subpath,
    resample_arclength,
)
from .deform import DeploymentParams, DeploymentReport, deploy
from .mesh import TriMesh
from .metrics import DiameterSummary, mis_radius_profile, summarize


@dataclass(frozen=True)
class RunSpec:
    """One deployment: where, how large, and the engine overrides."""

    start: tuple[int, float]
    end: tuple[int, float]
    diameter: float
    nominal_length: float | None = None
    foreshortening: float = 0.0
    k: float = 0.4
    d_infl: float = 6.5
    dr: float = 0.1
    d_con: float = 0.1
    r_init: float = 0.1
    capsule_length: float = DEFAULT_SEGMENT_LENGTH
    correct_radius: bool = True


def build_axis(tree: CenterlineTree, spec: RunSpec) -> StentAxis:
    """Selection -> (optional foreshortened selection) -> resampled axis."""
    sel = AxisSelection(start=spec.start, end=spec.end)
    if spec.nominal_length is not None:
        sel = apply_foreshortening(tree, sel, spec.nominal_length, spec.foreshortening)
    elif spec.foreshortening > 0.0:
        from .centerline import selection_length

        sel = apply_foreshortening(tree, sel, selection_length(tree, sel), spec.foreshortening)
    polyline = extract_subpath(tree, sel)
    return resample_arclength(polyline, spec.capsule_length, source=sel)


def params_for(spec: RunSpec) -> DeploymentParams:
    return DeploymentParams(
        r_target=spec.diameter / 2.0,
        r_init=spec.r_init,
        dr=spec.dr,
        d_con=spec.d_con,
        d_infl=spec.d_infl,
        smoothing_k=spec.k,
        correct_radius=spec.correct_radius,
    )


@dataclass
class RunResult:
    mesh: TriMesh
    report: DeploymentReport
    axis: StentAxis
    profile: list
    stented_summary: DiameterSummary | None


def run_deployment(mesh: TriMesh, tree: CenterlineTree, spec: RunSpec,
                   observer=None, with_metrics: bool = True,
                   profile_spacing: float = 0.5) -> RunResult:
    axis = build_axis(tree, spec)
    out, report = deploy(mesh, axis, params_for(spec), observer=observer)
    profile = []
    summary = None
    if with_metrics:
        profile = mis_radius_profile(out, axis.points, spacing=profile_spacing)
        summary = summarize(profile)
    return RunResult(mesh=out, report=report, axis=axis, profile=profile,
                     stented_summary=summary)
