#pragma once

#include <filesystem>

#include <json.hpp>

#include "partmotion/eval/evaluate.hpp"
#include "partmotion/eval/field.hpp"
#include "partmotion/eval/sweep.hpp"
#include "partmotion/train/trainer.hpp"

namespace partmotion::eval {

nlohmann::json report_to_json(const MetricsReport& report);
MetricsReport report_from_json(const nlohmann::json& j);

nlohmann::json curve_to_json(const SweepCurve& curve);

// Deterministic emitters: identical input produces byte-identical files.
// Metrics: report.json + emd_vs_dphi.svg (per-tuple EMD against the
// identity baseline).
void render_report(const MetricsReport& report,
                   const std::filesystem::path& out_dir);
// Sweep: curve.json + emd_vs_phi.svg.
void render_report(const SweepCurve& curve,
                   const std::filesystem::path& out_dir);
// Field: field.csv + axis.json + field_topdown.svg / field_side.svg with
// exactly K^2 arrows per slice view.
void render_report(const FieldReport& field,
                   const std::filesystem::path& out_dir);

// Training loss curve from a run record: loss.svg.
void render_loss_curve(const train::RunRecord& record,
                       const std::filesystem::path& out_dir);

}  // namespace partmotion::eval
