"""End-to-end credal distillation on synthetic data.

Trains a five-member MLP ensemble on three Gaussian classes, wraps its
temperature-scaled predictions into credal labels, distills a single
credal student (a 2C+1-headed MLP predicting p*, interval lengths, and
the weight factor), and compares its accuracy and epistemic-uncertainty
quality against the teacher.  Takes a few seconds on one core.

Run: python3 demos/03_distillation_pipeline.py
"""

import numpy as np

from credalkit import (
    EnsemblePredictor,
    MlpSpec,
    TrainConfig,
    distill,
    evaluate_model,
    gen_synthetic,
    train_snn_ensemble,
)
from credalkit.train import head_width

SEED = 1
CLASSES = 3

print("=== Data: separable Gaussian classes + an OOD cluster ===")
train = gen_synthetic("gaussians", {"classes": CLASSES, "separation": 6.0, "n": 600}, seed=SEED)
test = gen_synthetic("gaussians", {"classes": CLASSES, "separation": 6.0, "n": 300}, seed=SEED + 1000)
ood = gen_synthetic(
    "ood_cluster",
    {"classes": CLASSES, "separation": 6.0, "n": 400, "distance": 6.0, "spread": 2.25},
    seed=SEED + 2000,
)
print(f"train {len(train)}, test {len(test)}, ood {len(ood)} samples")

print("\n=== Teacher: five independently seeded MLPs ===")
spec = MlpSpec(input_dim=2, hidden_dims=(24, 24), output_dim=CLASSES,
               activation="tanh", seed=11)
cfg = TrainConfig(epochs=40, batch_size=64, learning_rate=1e-3, lr_drop_epoch=32,
                  temperature=2.5, seed=12)
members = train_snn_ensemble(train, spec, cfg, members=5)
teacher = EnsemblePredictor(members=tuple(members))
de_probs = teacher.member_probs(test.x).mean(axis=0)
de_accuracy = float(np.mean(np.argmax(de_probs, axis=1) == test.y))
print(f"deep-ensemble test accuracy: {de_accuracy:.4f}")

print("\n=== Distill a credal student (temperature 2.5) ===")
student_spec = MlpSpec(input_dim=2, hidden_dims=(24, 24),
                       output_dim=head_width("ced", CLASSES),
                       activation="tanh", seed=13)
student = distill(members, "ced", student_spec, cfg, train)
print(f"distillation loss: {student.loss_history[0]:.4f} -> {student.loss_history[-1]:.4f}")

print("\n=== OOD detection via epistemic uncertainty ===")
report = evaluate_model(student, test, ood, "eu")
print(f"student test accuracy: {report.id_accuracy:.4f} (teacher {de_accuracy:.4f})")
print(f"EU-based AUROC: {report.auroc:.4f}   AUPRC: {report.auprc:.4f}")
print(f"mean EU  in-distribution: {report.id_uncertainties.mean():.4f}")
print(f"mean EU  out-of-distribution: {report.ood_uncertainties.mean():.4f}")
print(f"calibration (ECE, 15 bins): {report.ece:.4f}   AUARC: {report.auarc:.4f}")

print("\n=== Baselines on the same split ===")
for name, predictor, kind in (
    ("DE ensemble-disagreement EU", teacher, "eu"),
    ("DE wrapped credal EU", EnsemblePredictor(members=tuple(members), wrapped=True), "eu"),
):
    r = evaluate_model(predictor, test, ood, kind)
    print(f"  {name:32s} AUROC {r.auroc:.4f}")

ed_spec = MlpSpec(input_dim=2, hidden_dims=(24, 24), output_dim=CLASSES,
                  activation="tanh", seed=14)
ed_student = distill(members, "ed", ed_spec, cfg, train)
r = evaluate_model(ed_student, test, ood, "tu")
print(f"  {'plain distilled student (TU only)':32s} AUROC {r.auroc:.4f}")
print("\n(the plain student cannot produce EU at all; requesting it raises)")
