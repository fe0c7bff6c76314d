#include "partmotion/synthgen/dataset.hpp"

#include <json.hpp>

#include <fstream>

#include "partmotion/util/digest.hpp"
#include "partmotion/util/rng.hpp"

namespace partmotion::synthgen {

namespace fs = std::filesystem;
using nlohmann::json;

const TrainingTuple& Dataset::tuple(int flat_index) const {
  return object_of(flat_index)
      .tuples[static_cast<std::size_t>(flat_index % meta.tuples_per_object)];
}

const DatasetObject& Dataset::object_of(int flat_index) const {
  return objects[static_cast<std::size_t>(flat_index / meta.tuples_per_object)];
}

namespace {

constexpr int kFormatVersion = 1;

std::string object_basename(int idx) { return "obj_" + std::to_string(idx); }

json joint_to_json(const JointSpec& j) {
  return json{{"kind", j.kind == JointType::revolute ? "revolute" : "prismatic"},
              {"axis", {j.axis.x(), j.axis.y(), j.axis.z()}},
              {"pivot", {j.pivot.x(), j.pivot.y(), j.pivot.z()}},
              {"pose_min", j.pose_min},
              {"pose_max", j.pose_max}};
}

JointSpec joint_from_json(const json& j) {
  JointSpec out;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "revolute") out.kind = JointType::revolute;
  else if (kind == "prismatic") out.kind = JointType::prismatic;
  else throw DatasetFormatError("unknown joint kind: " + kind);
  for (int a = 0; a < 3; ++a) {
    out.axis[a] = j.at("axis").at(static_cast<std::size_t>(a)).get<double>();
    out.pivot[a] = j.at("pivot").at(static_cast<std::size_t>(a)).get<double>();
  }
  out.pose_min = j.at("pose_min").get<double>();
  out.pose_max = j.at("pose_max").get<double>();
  return out;
}

void append_cloud_f32(std::vector<float>& buf, const PointCloud& c) {
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    for (int a = 0; a < 3; ++a) buf.push_back(static_cast<float>(c(i, a)));
  }
}

std::size_t tuple_byte_size(int n_points, int joints) {
  return static_cast<std::size_t>(n_points) * 9 * sizeof(float) +
         static_cast<std::size_t>(joints) * 3 * sizeof(float) +
         static_cast<std::size_t>(n_points);
}

json read_json_file(const fs::path& p, const char* what) {
  std::ifstream in(p);
  if (!in) throw DatasetFormatError(std::string("missing ") + what + ": " +
                                    p.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DatasetFormatError(std::string("malformed ") + what + ": " +
                             e.what());
  }
  return j;
}

}  // namespace

void write_dataset(const std::vector<ArticulatedObject>& objects,
                   int tuples_per_object, const fs::path& path,
                   double delta_min) {
  if (objects.empty() || tuples_per_object <= 0) {
    throw std::invalid_argument("write_dataset: empty input");
  }
  const int n_points = objects.front().num_points();
  const int joints = objects.front().num_joints();
  const Category category = objects.front().category;
  for (const auto& o : objects) {
    if (o.num_points() != n_points || o.num_joints() != joints ||
        o.category != category) {
      throw std::invalid_argument(
          "write_dataset: objects must share category, N and J");
    }
  }

  fs::create_directories(path);
  {
    json meta{{"format_version", kFormatVersion},
              {"category", to_string(category)},
              {"n_points", n_points},
              {"n_objects", static_cast<int>(objects.size())},
              {"tuples_per_object", tuples_per_object},
              {"joints_per_object", joints}};
    std::ofstream out(path / "meta.json");
    out << meta.dump(2) << "\n";
  }

  for (std::size_t idx = 0; idx < objects.size(); ++idx) {
    const ArticulatedObject& obj = objects[idx];
    {
      json j{{"category", to_string(obj.category)},
             {"seed", obj.seed},
             {"joints", json::array()}};
      for (const auto& joint : obj.joints) {
        j["joints"].push_back(joint_to_json(joint));
      }
      std::ofstream out(path / (object_basename(static_cast<int>(idx)) +
                                ".json"));
      out << j.dump(2) << "\n";
    }

    const double dmin =
        delta_min > 0.0 ? delta_min
                        : default_delta_min(obj.joints.front().kind);
    std::ofstream bin(path / (object_basename(static_cast<int>(idx)) + ".bin"),
                      std::ios::binary);
    for (int t = 0; t < tuples_per_object; ++t) {
      Rng rng(mix_seed(obj.seed, static_cast<std::uint64_t>(t),
                       fnv1a64("tuple")));
      const TrainingTuple tup = sample_tuple(obj, rng, dmin);
      std::vector<float> buf;
      buf.reserve(static_cast<std::size_t>(n_points) * 9 +
                  static_cast<std::size_t>(joints) * 3);
      append_cloud_f32(buf, tup.i1);
      append_cloud_f32(buf, tup.i2);
      append_cloud_f32(buf, tup.i3);
      for (const PartPose* p : {&tup.phi1, &tup.phi2, &tup.phi3}) {
        for (Eigen::Index i = 0; i < p->size(); ++i) {
          buf.push_back(static_cast<float>((*p)[i]));
        }
      }
      bin.write(reinterpret_cast<const char*>(buf.data()),
                static_cast<std::streamsize>(buf.size() * sizeof(float)));
      bin.write(reinterpret_cast<const char*>(tup.movable_mask.data()),
                static_cast<std::streamsize>(tup.movable_mask.size()));
    }
  }
}

Dataset read_dataset(const fs::path& path) {
  const json meta_j = read_json_file(path / "meta.json", "meta.json");
  Dataset ds;
  try {
    ds.meta.format_version = meta_j.at("format_version").get<int>();
    if (ds.meta.format_version != kFormatVersion) {
      throw DatasetVersionError(
          "dataset format_version " +
          std::to_string(ds.meta.format_version) + " unsupported (expected " +
          std::to_string(kFormatVersion) + ")");
    }
    ds.meta.category = meta_j.at("category").get<std::string>();
    ds.meta.n_points = meta_j.at("n_points").get<int>();
    ds.meta.n_objects = meta_j.at("n_objects").get<int>();
    ds.meta.tuples_per_object = meta_j.at("tuples_per_object").get<int>();
    ds.meta.joints_per_object = meta_j.at("joints_per_object").get<int>();
  } catch (const json::exception& e) {
    throw DatasetFormatError(std::string("malformed meta.json: ") + e.what());
  }
  if (ds.meta.n_points < 1 || ds.meta.n_objects < 1 ||
      ds.meta.tuples_per_object < 1 || ds.meta.joints_per_object < 1) {
    throw DatasetFormatError("meta.json fields out of range");
  }

  const int n = ds.meta.n_points;
  const int joints = ds.meta.joints_per_object;
  const std::size_t tuple_bytes = tuple_byte_size(n, joints);

  for (int idx = 0; idx < ds.meta.n_objects; ++idx) {
    const fs::path obj_json_path = path / (object_basename(idx) + ".json");
    const json obj_j = read_json_file(obj_json_path, "object header");
    std::string category;
    std::uint64_t seed = 0;
    std::vector<JointSpec> stored_joints;
    try {
      category = obj_j.at("category").get<std::string>();
      seed = obj_j.at("seed").get<std::uint64_t>();
      for (const auto& jj : obj_j.at("joints")) {
        stored_joints.push_back(joint_from_json(jj));
      }
    } catch (const json::exception& e) {
      throw DatasetFormatError(std::string("malformed object header: ") +
                               e.what());
    }
    if (category != ds.meta.category) {
      throw DatasetFormatError("object category differs from meta.json");
    }

    DatasetObject entry;
    entry.object = make_object(category_from_string(category), seed, n);
    if (entry.object.num_joints() != static_cast<int>(stored_joints.size()) ||
        entry.object.num_joints() != joints) {
      throw DatasetFormatError("joint count mismatch in object header");
    }
    for (std::size_t j = 0; j < stored_joints.size(); ++j) {
      const JointSpec& a = entry.object.joints[j];
      const JointSpec& b = stored_joints[j];
      if (a.kind != b.kind || a.axis != b.axis || a.pivot != b.pivot ||
          a.pose_min != b.pose_min || a.pose_max != b.pose_max) {
        throw DatasetFormatError(
            "object header joints disagree with regenerated object");
      }
    }

    const fs::path bin_path = path / (object_basename(idx) + ".bin");
    std::error_code ec;
    const auto file_size = fs::file_size(bin_path, ec);
    if (ec) throw DatasetFormatError("missing payload: " + bin_path.string());
    const std::size_t expected =
        tuple_bytes * static_cast<std::size_t>(ds.meta.tuples_per_object);
    if (file_size < expected) {
      throw DatasetTruncationError(
          "truncated payload " + bin_path.string() + ": " +
          std::to_string(file_size) + " bytes, expected " +
          std::to_string(expected));
    }
    if (file_size != expected) {
      throw DatasetFormatError(
          "payload size disagrees with header counts: " + bin_path.string());
    }

    std::ifstream bin(bin_path, std::ios::binary);
    std::vector<float> fbuf(static_cast<std::size_t>(n) * 9 +
                            static_cast<std::size_t>(joints) * 3);
    std::vector<std::uint8_t> mbuf(static_cast<std::size_t>(n));
    for (int t = 0; t < ds.meta.tuples_per_object; ++t) {
      bin.read(reinterpret_cast<char*>(fbuf.data()),
               static_cast<std::streamsize>(fbuf.size() * sizeof(float)));
      bin.read(reinterpret_cast<char*>(mbuf.data()),
               static_cast<std::streamsize>(mbuf.size()));
      if (!bin) throw DatasetTruncationError("truncated payload (read)");

      TrainingTuple tup;
      std::size_t c = 0;
      for (PointCloud* cloud : {&tup.i1, &tup.i2, &tup.i3}) {
        cloud->resize(n, 3);
        for (int i = 0; i < n; ++i) {
          for (int a = 0; a < 3; ++a) {
            (*cloud)(i, a) = static_cast<double>(fbuf[c++]);
          }
        }
        if (!all_finite(*cloud)) {
          throw DatasetFormatError("non-finite cloud in payload");
        }
      }
      for (PartPose* p : {&tup.phi1, &tup.phi2, &tup.phi3}) {
        p->resize(joints);
        for (int i = 0; i < joints; ++i) {
          (*p)[i] = static_cast<double>(fbuf[c++]);
        }
      }
      tup.movable_mask.assign(mbuf.begin(), mbuf.end());
      for (const auto v : tup.movable_mask) {
        if (v > 1) throw DatasetFormatError("mask byte not 0/1");
      }
      tup.gt_transforms_1to3 =
          gt_point_transforms(entry.object, tup.phi1, tup.phi3);
      entry.tuples.push_back(std::move(tup));
    }
    ds.objects.push_back(std::move(entry));
  }
  return ds;
}

}  // namespace partmotion::synthgen
