"""The evaluation metrics, from toy scores to plot-ready CSVs.

Shows the detection metrics (AUROC via tie-aware ranks, average
precision), expected calibration error with right-closed bins, and
accuracy-rejection curves, first on tiny hand-checkable inputs and then
on a distilled model, exporting per-sample uncertainties for external
density plots.

Run: python3 demos/04_ood_evaluation.py [outdir]
"""

import sys
from pathlib import Path

from credalkit import (
    MlpSpec,
    ScoredSample,
    TrainConfig,
    accuracy_rejection_curve,
    auprc,
    auroc,
    distill,
    ece,
    evaluate_model,
    gen_synthetic,
    train_snn_ensemble,
)
from credalkit.archive import format_float
from credalkit.train import head_width

outdir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("demo_outputs")
outdir.mkdir(parents=True, exist_ok=True)

print("=== Hand-checkable metric values ===")
tiny = [
    ScoredSample(uncertainty=0.1, is_ood=False, predicted_class=0),
    ScoredSample(uncertainty=0.9, is_ood=False, predicted_class=0),
    ScoredSample(uncertainty=0.5, is_ood=True, predicted_class=0),
    ScoredSample(uncertainty=0.95, is_ood=True, predicted_class=0),
]
print(f"AUROC of the 2x2 example: {auroc(tiny):.4f}  (3 of 4 pairs ordered -> 0.75)")
print(f"AUPRC of the same example: {auprc(tiny):.4f}  (0.5 + 0.5 * 2/3)")

calib = [
    ScoredSample(uncertainty=0, is_ood=False, predicted_class=0, true_class=0, confidence=0.4),
    ScoredSample(uncertainty=0, is_ood=False, predicted_class=0, true_class=1, confidence=0.9),
]
print(f"ECE, two bins, one under- one over-confident: {ece(calib, bins=2):.4f}")

ar = [
    ScoredSample(uncertainty=u, is_ood=False, predicted_class=0, true_class=0 if c else 1)
    for u, c in zip([0.1, 0.2, 0.9, 0.3], [1, 1, 0, 1])
]
curve, auarc = accuracy_rejection_curve(ar)
print(f"AR curve accuracies {[round(a, 3) for _, a in curve]}, AUARC {auarc:.4f}")

print("\n=== A distilled model end to end ===")
train = gen_synthetic("gaussians", {"classes": 3, "separation": 6.0, "n": 600}, seed=3)
test = gen_synthetic("gaussians", {"classes": 3, "separation": 6.0, "n": 300}, seed=1003)
ood = gen_synthetic(
    "ood_cluster",
    {"classes": 3, "separation": 6.0, "n": 400, "distance": 6.0, "spread": 2.25},
    seed=2003,
)
cfg = TrainConfig(epochs=40, batch_size=64, lr_drop_epoch=32, temperature=2.5, seed=31)
members = train_snn_ensemble(
    train, MlpSpec(2, (24, 24), 3, "tanh", seed=32), cfg, members=5
)
student = distill(
    members, "ced", MlpSpec(2, (24, 24), head_width("ced", 3), "tanh", seed=33), cfg, train
)

for kind in ("eu", "tu", "au"):
    report = evaluate_model(student, test, ood, kind)
    print(f"  uncertainty={kind}: AUROC {report.auroc:.4f}  AUPRC {report.auprc:.4f}")

report = evaluate_model(student, test, ood, "eu")

uncertainty_csv = outdir / "per_sample_uncertainty.csv"
with open(uncertainty_csv, "w", encoding="ascii", newline="\n") as fh:
    fh.write("split,index,uncertainty\n")
    for i, u in enumerate(report.id_uncertainties):
        fh.write(f"id,{i},{format_float(u)}\n")
    for i, u in enumerate(report.ood_uncertainties):
        fh.write(f"ood,{i},{format_float(u)}\n")

ar_csv = outdir / "accuracy_rejection.csv"
with open(ar_csv, "w", encoding="ascii", newline="\n") as fh:
    fh.write("rejection_rate,accuracy\n")
    for rate, acc in report.ar_curve:
        fh.write(f"{format_float(rate)},{format_float(acc)}\n")

print(f"\nwrote {uncertainty_csv} (density-plot input) and {ar_csv}")
print("both files are plain CSV, ready for any plotting tool")
