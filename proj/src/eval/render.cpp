#include "partmotion/eval/render.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace partmotion::eval {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json aggregate_to_json(const Aggregate& a) {
  return json{{"median", a.median}, {"mean", a.mean}};
}

Aggregate aggregate_from_json(const json& j) {
  return {j.at("median").get<double>(), j.at("mean").get<double>()};
}

json aggregates_to_json(const std::map<std::string, Aggregate>& m) {
  json out = json::object();
  for (const auto& [k, v] : m) out[k] = aggregate_to_json(v);
  return out;
}

std::map<std::string, Aggregate> aggregates_from_json(const json& j) {
  std::map<std::string, Aggregate> out;
  for (auto it = j.begin(); it != j.end(); ++it) {
    out[it.key()] = aggregate_from_json(it.value());
  }
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

// Minimal deterministic SVG scatter/line chart.
class Chart {
 public:
  Chart(double xmin, double xmax, double ymin, double ymax)
      : xmin_(xmin), xmax_(xmax), ymin_(ymin), ymax_(ymax) {
    if (xmax_ - xmin_ < 1e-12) xmax_ = xmin_ + 1.0;
    if (ymax_ - ymin_ < 1e-12) ymax_ = ymin_ + 1.0;
    body_ += "<rect x='0' y='0' width='640' height='420' fill='white'/>\n";
    body_ += "<line x1='60' y1='370' x2='600' y2='370' stroke='black'/>\n";
    body_ += "<line x1='60' y1='370' x2='60' y2='30' stroke='black'/>\n";
  }

  double px(double x) const {
    return 60.0 + 540.0 * (x - xmin_) / (xmax_ - xmin_);
  }
  double py(double y) const {
    return 370.0 - 340.0 * (y - ymin_) / (ymax_ - ymin_);
  }

  void circle(double x, double y, const std::string& color) {
    body_ += "<circle cx='" + fmt(px(x)) + "' cy='" + fmt(py(y)) +
             "' r='3' fill='" + color + "'/>\n";
  }

  void polyline(const std::vector<std::pair<double, double>>& pts,
                const std::string& color) {
    if (pts.empty()) return;
    body_ += "<polyline fill='none' stroke='" + color + "' points='";
    for (const auto& [x, y] : pts) {
      body_ += fmt(px(x)) + "," + fmt(py(y)) + " ";
    }
    body_ += "'/>\n";
  }

  void label(double x, double y, const std::string& text,
             const std::string& color = "black") {
    body_ += "<text x='" + fmt(x) + "' y='" + fmt(y) + "' font-size='12' fill='" +
             color + "'>" + text + "</text>\n";
  }

  void axis_labels(const std::string& xname, const std::string& yname) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4g", xmin_);
    label(60, 390, buf);
    std::snprintf(buf, sizeof(buf), "%.4g", xmax_);
    label(570, 390, buf);
    std::snprintf(buf, sizeof(buf), "%.4g", ymin_);
    label(8, 370, buf);
    std::snprintf(buf, sizeof(buf), "%.4g", ymax_);
    label(8, 36, buf);
    label(300, 410, xname);
    label(8, 20, yname);
  }

  void write(const fs::path& file) const {
    std::ofstream out(file);
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='640' "
           "height='420'>\n"
        << body_ << "</svg>\n";
  }

 private:
  double xmin_, xmax_, ymin_, ymax_;
  std::string body_;
};

}  // namespace

json report_to_json(const MetricsReport& report) {
  json per_tuple = json::array();
  for (const auto& r : report.per_tuple) {
    json rec{{"object_index", r.object_index},
             {"tuple_index", r.tuple_index},
             {"dphi", r.dphi},
             {"revolute", r.revolute},
             {"emd", r.emd},
             {"chamfer", r.chamfer},
             {"pae", r.pae},
             {"base_emd", r.base_emd},
             {"base_chamfer", r.base_chamfer},
             {"base_pae", r.base_pae}};
    if (!r.pae_per_joint.empty()) rec["pae_per_joint"] = r.pae_per_joint;
    per_tuple.push_back(std::move(rec));
  }
  json out{{"version", report.version},
           {"category", report.category},
           {"config_hash", report.config_hash},
           {"count", report.count},
           {"per_tuple", std::move(per_tuple)},
           {"aggregates", aggregates_to_json(report.aggregates)},
           {"baselines", aggregates_to_json(report.baselines)}};
  if (report.ablation.has_value()) {
    out["ablation"] = json{
        {"aggregates", aggregates_to_json(report.ablation->aggregates)},
        {"emd_per_tuple", report.ablation->emd_per_tuple},
        {"nir_lower_emd_median", report.ablation->nir_lower_emd_median}};
  }
  return out;
}

MetricsReport report_from_json(const json& j) {
  MetricsReport report;
  report.version = j.at("version").get<int>();
  report.category = j.at("category").get<std::string>();
  report.config_hash = j.at("config_hash").get<std::string>();
  report.count = j.at("count").get<int>();
  for (const auto& rec : j.at("per_tuple")) {
    TupleRecord r;
    r.object_index = rec.at("object_index").get<int>();
    r.tuple_index = rec.at("tuple_index").get<int>();
    r.dphi = rec.at("dphi").get<double>();
    r.revolute = rec.at("revolute").get<bool>();
    r.emd = rec.at("emd").get<double>();
    r.chamfer = rec.at("chamfer").get<double>();
    r.pae = rec.at("pae").get<double>();
    r.base_emd = rec.at("base_emd").get<double>();
    r.base_chamfer = rec.at("base_chamfer").get<double>();
    r.base_pae = rec.at("base_pae").get<double>();
    if (rec.contains("pae_per_joint")) {
      r.pae_per_joint = rec.at("pae_per_joint").get<std::vector<double>>();
    }
    report.per_tuple.push_back(std::move(r));
  }
  report.aggregates = aggregates_from_json(j.at("aggregates"));
  report.baselines = aggregates_from_json(j.at("baselines"));
  if (j.contains("ablation")) {
    AblationBlock block;
    block.aggregates = aggregates_from_json(j.at("ablation").at("aggregates"));
    block.emd_per_tuple =
        j.at("ablation").at("emd_per_tuple").get<std::vector<double>>();
    block.nir_lower_emd_median =
        j.at("ablation").at("nir_lower_emd_median").get<bool>();
    report.ablation = std::move(block);
  }
  return report;
}

json curve_to_json(const SweepCurve& curve) {
  json points = json::array();
  for (const auto& p : curve.points) {
    points.push_back(json{{"phi3", p.phi3},
                          {"emd", p.emd},
                          {"extrapolation", p.extrapolation}});
  }
  return json{{"joint", curve.joint},
              {"phi1", curve.phi1},
              {"phi2", curve.phi2},
              {"points", std::move(points)}};
}

void render_report(const MetricsReport& report, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  {
    std::ofstream out(out_dir / "report.json");
    out << report_to_json(report).dump(2) << "\n";
  }
  double xmax = 0.0, ymax = 0.0;
  for (const auto& r : report.per_tuple) {
    xmax = std::max(xmax, r.dphi);
    ymax = std::max({ymax, r.emd, r.base_emd});
  }
  Chart chart(0.0, xmax, 0.0, ymax);
  for (const auto& r : report.per_tuple) {
    chart.circle(r.dphi, r.base_emd, "silver");
  }
  for (const auto& r : report.per_tuple) {
    chart.circle(r.dphi, r.emd, "steelblue");
  }
  chart.label(430, 20, "identity baseline", "silver");
  chart.label(430, 34, "prediction", "steelblue");
  chart.axis_labels("|phi3 - phi1|", "EMD");
  chart.write(out_dir / "emd_vs_dphi.svg");
}

void render_report(const SweepCurve& curve, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  {
    std::ofstream out(out_dir / "curve.json");
    out << curve_to_json(curve).dump(2) << "\n";
  }
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymax = 0.0;
  for (const auto& p : curve.points) {
    xmin = std::min(xmin, p.phi3);
    xmax = std::max(xmax, p.phi3);
    ymax = std::max(ymax, p.emd);
  }
  Chart chart(xmin, xmax, 0.0, ymax);
  std::vector<std::pair<double, double>> line;
  for (const auto& p : curve.points) line.emplace_back(p.phi3, p.emd);
  chart.polyline(line, "steelblue");
  for (const auto& p : curve.points) {
    chart.circle(p.phi3, p.emd, p.extrapolation ? "firebrick" : "steelblue");
  }
  chart.label(430, 20, "interpolation", "steelblue");
  chart.label(430, 34, "extrapolation", "firebrick");
  chart.axis_labels("phi3", "EMD");
  chart.write(out_dir / "emd_vs_phi.svg");
}

namespace {

// One slice view: exactly K^2 arrows, displacement averaged along the
// projected axis. axis_u/axis_v pick the in-plane coordinates.
void render_field_view(const FieldReport& field, int axis_u, int axis_v,
                       const fs::path& file) {
  const int k = field.grid_k;
  std::vector<double> u(static_cast<std::size_t>(k) * k, 0.0);
  std::vector<double> v(static_cast<std::size_t>(k) * k, 0.0);
  std::vector<double> du(static_cast<std::size_t>(k) * k, 0.0);
  std::vector<double> dv(static_cast<std::size_t>(k) * k, 0.0);
  const int proj_axis = 3 - axis_u - axis_v;
  for (Eigen::Index r = 0; r < field.positions.rows(); ++r) {
    const int i = static_cast<int>(r) / (k * k);
    const int j = (static_cast<int>(r) / k) % k;
    const int kk = static_cast<int>(r) % k;
    const int iu = axis_u == 0 ? i : (axis_u == 1 ? j : kk);
    const int iv = axis_v == 0 ? i : (axis_v == 1 ? j : kk);
    const std::size_t cell = static_cast<std::size_t>(iu) * k + iv;
    u[cell] = field.positions(r, axis_u);
    v[cell] = field.positions(r, axis_v);
    du[cell] += field.displacements(r, axis_u) / k;
    dv[cell] += field.displacements(r, axis_v) / k;
  }
  (void)proj_axis;
  double umin = u[0], umax = u[0], vmin = v[0], vmax = v[0], dmax = 0.0;
  for (std::size_t c = 0; c < u.size(); ++c) {
    umin = std::min(umin, u[c]);
    umax = std::max(umax, u[c]);
    vmin = std::min(vmin, v[c]);
    vmax = std::max(vmax, v[c]);
    dmax = std::max(dmax, std::hypot(du[c], dv[c]));
  }
  const double cell_px = 540.0 / k;
  const double scale = dmax > 1e-12
                           ? cell_px / dmax
                           : 0.0;  // longest arrow spans one cell
  std::ofstream out(file);
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='640' height='640'>\n";
  out << "<rect x='0' y='0' width='640' height='640' fill='white'/>\n";
  const auto px = [&](double x) {
    return 50.0 + 540.0 * (x - umin) / std::max(umax - umin, 1e-12);
  };
  const auto py = [&](double y) {
    return 590.0 - 540.0 * (y - vmin) / std::max(vmax - vmin, 1e-12);
  };
  char buf[200];
  for (std::size_t c = 0; c < u.size(); ++c) {
    const double x0 = px(u[c]);
    const double y0 = py(v[c]);
    const double x1 = x0 + scale * du[c];
    const double y1 = y0 - scale * dv[c];
    std::snprintf(buf, sizeof(buf),
                  "<line x1='%.2f' y1='%.2f' x2='%.2f' y2='%.2f' "
                  "stroke='steelblue' stroke-width='1'/>\n",
                  x0, y0, x1, y1);
    out << buf;
  }
  out << "</svg>\n";
}

}  // namespace

void render_report(const FieldReport& field, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  write_field_csv(field, out_dir / "field.csv");
  {
    json axis{{"fittable", field.fittable},
              {"axis_error_deg", field.axis_error_deg},
              {"fitted_axis",
               {field.fitted_axis.x(), field.fitted_axis.y(),
                field.fitted_axis.z()}},
              {"gt_axis",
               {field.gt_axis.x(), field.gt_axis.y(), field.gt_axis.z()}},
              {"joint", field.joint},
              {"nodes_in_region", field.nodes_in_region}};
    std::ofstream out(out_dir / "axis.json");
    out << axis.dump(2) << "\n";
  }
  // Top-down view: x-y plane; side view: y-z plane.
  render_field_view(field, 0, 1, out_dir / "field_topdown.svg");
  render_field_view(field, 1, 2, out_dir / "field_side.svg");
}

void render_loss_curve(const train::RunRecord& record, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  double ymax = 0.0;
  for (const auto& s : record.steps) ymax = std::max(ymax, s.loss);
  const double xmax =
      record.steps.empty() ? 1.0 : static_cast<double>(record.steps.back().step);
  Chart chart(0.0, xmax, 0.0, ymax);
  std::vector<std::pair<double, double>> pts;
  for (const auto& s : record.steps) {
    pts.emplace_back(static_cast<double>(s.step), s.loss);
  }
  chart.polyline(pts, "steelblue");
  chart.axis_labels("step", "loss");
  chart.write(out_dir / "loss.svg");
}

}  // namespace partmotion::eval
