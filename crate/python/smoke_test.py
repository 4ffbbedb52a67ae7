#!/usr/bin/env python3
"""Smoke test for the acf_py extension module.

Builds nothing itself: it expects `cargo build -p acf-py --release` to have
produced target/release/libacf_py.so, which it stages into a temp directory
under the importable name acf_py.so.
"""

import math
import shutil
import sys
import tempfile
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parent.parent


def import_acf_py():
    candidates = [
        REPO_ROOT / "target" / "release" / "libacf_py.so",
        REPO_ROOT / "target" / "debug" / "libacf_py.so",
    ]
    built = next((p for p in candidates if p.exists()), None)
    if built is None:
        sys.exit("libacf_py.so not found; run `cargo build -p acf-py --release` first")
    stage = Path(tempfile.mkdtemp(prefix="acf_py_"))
    shutil.copy2(built, stage / "acf_py.so")
    sys.path.insert(0, str(stage))
    import acf_py

    return acf_py


def check(name, condition):
    status = "ok" if condition else "FAIL"
    print(f"  {name}: {status}")
    if not condition:
        sys.exit(1)


def main():
    acf = import_acf_py()

    print("taxonomy")
    check("mug parts", acf.parts_of("mug") == ["container", "handle"])
    check("hammer parts", acf.parts_of("hammer") == ["stir"])
    check("container actions", acf.actions_of("container") == ["grasp", "contain", "pour"])
    check(
        "compatible pairs",
        sorted(acf.compatible_pairs()) == [("handle", "container"), ("stir", "scoop")],
    )

    print("acf type")
    a = acf.Acf([0.0, 0.0, 1.0], [0.0, 0.0, 1.0])
    b = acf.Acf.from_direction([0.1, 0.0, 1.0], [0.0, 0.0, 2.0])
    check("keypoint round trip", a.keypoint == [0.0, 0.0, 1.0])
    check("normalized direction", abs(sum(c * c for c in b.axis) - 1.0) < 1e-12)
    check("zero angle", a.angular_error_deg(b) < 1e-12)
    check("translation error", abs(a.translation_error(b) - 0.1) < 1e-12)
    check("angular error", abs(acf.angular_error_deg([0, 0, 1], [1, 0, 0]) - 90.0) < 1e-9)

    print("mean shift")
    cluster = [[0.01 * i, 0.0, 1.0] for i in range(5)] + [[0.5, 0.5, 2.0]]
    mode = acf.mean_shift(cluster, bandwidth=0.05)
    check("mode near cluster", abs(mode[0] - 0.02) < 0.05 and abs(mode[2] - 1.0) < 0.05)

    print("losses")
    value, grad = acf.keypoint_loss([[0, 0, 0]] * 4, [[0, 0, 0]] * 4, [1.0] * 4)
    check("zero offsets give zero loss", value == 0.0 and len(grad) == 4)
    value, grad = acf.vector_loss([[0, 0, 1], [0, 1, 0]], [0, 0, 1], [1.0, 1.0])
    check("vector loss positive", value > 0.0 and len(grad) == 2)
    value, grad = acf.label_loss([5.0, -5.0], [1, 0], [1.0, 1.0])
    check("label loss small on correct logits", 0.0 < value < 0.05 and len(grad) == 2)

    print("pipeline")
    scene = acf.random_scene(7, min_objects=2, max_objects=3)
    check("scene has parts", len(scene.parts) >= 2)
    bundle = acf.emulate(scene, seed=0, grid_n=10)
    check("one roi per part", bundle.roi_count == len(scene.parts))
    for method in ("endpoints", "vector", "scatter_line"):
        parts, failures = acf.estimate(bundle, axis_method=method)
        ok = not failures and len(parts) == len(scene.parts)
        for part in parts:
            gt = scene.parts[part.roi_index].acf
            ok = ok and part.acf.translation_error(gt) < 1e-6
            ok = ok and part.acf.angular_error_deg(gt) < 1e-4
        check(f"zero-noise recovery ({method})", ok)

    parts, _ = acf.estimate(bundle)
    groups = acf.associate(bundle, parts)
    by_object = {}
    for h in groups:
        for i in h.parts:
            by_object.setdefault(scene.parts[parts[i].roi_index].object_index, set()).add(id(h))
    check("groups never mix objects", all(len(v) == 1 for v in by_object.values()))

    report = acf.evaluate_scene(scene, parts)
    check("perfect mean AP", abs(report["mean_ap"] - 100.0) < 1e-9)

    print("manipulation")
    handle = acf.Acf([0.06, 0.0, 1.0], [-1.0, 0.0, 0.0])
    container = acf.Acf([0.0, 0.0, 1.0], [0.0, 0.0, 1.0])
    grasp = acf.grasp_mug(handle, container)
    frame_ok = all(
        abs(sum(grasp.axes[r][i] * grasp.axes[r][j] for r in range(3)) - (i == j)) < 1e-9
        for i in range(3)
        for j in range(3)
    )
    check("mug grasp frame orthonormal", frame_ok)
    check("grasp at handle keypoint", grasp.position == handle.keypoint)

    target = acf.Acf([0.2, 0.0, 1.0], [0.0, 0.0, 1.0])
    pour = acf.pour_trajectory(container, target, up=[0.0, 0.0, 1.0])
    check("pour has two phases", 0 < pour.phase_boundary < len(pour.waypoints))
    upright = all(
        abs(math.degrees(math.acos(max(-1.0, min(1.0, f[2][1])))) ) < 1e-9
        for _, f in pour.waypoints[: pour.phase_boundary]
    )
    check("transport phase stays upright", upright)

    stir = acf.Acf([0.1, 0.0, 0.9], [0.0, 0.0, 1.0])
    scoop = acf.Acf([0.1, 0.0, 1.05], [1.0, 0.0, 0.0])
    traj = acf.stir_trajectory(stir, scoop, container)
    descent_end = traj.waypoints[traj.phase_boundary - 1][0]
    check(
        "stir descent reaches container keypoint",
        all(abs(x - y) < 1e-9 for x, y in zip(descent_end, container.keypoint)),
    )
    ratio, ok = acf.pour_success(0.7, 1.0)
    check("pour success boundary", ok and abs(ratio - 0.7) < 1e-12)
    check("stir success boundary", acf.stir_success(0.019) and not acf.stir_success(0.02))

    print("all smoke tests passed")


if __name__ == "__main__":
    main()
