#include "skilladapt/kmp/io.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "skilladapt/error.hpp"

namespace skilladapt::kmp {
namespace {

template <int N>
Eigen::Matrix<double, N, 1> fixed_vector(const nlohmann::json& j, const char* field) {
  if (!j.is_array() || j.size() != static_cast<std::size_t>(N)) {
    throw Error(ErrorCode::ParseError,
                std::string("field '") + field + "' must be an array of " + std::to_string(N) + " numbers");
  }
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) {
    if (!j[static_cast<std::size_t>(i)].is_number()) {
      throw Error(ErrorCode::ParseError, std::string("field '") + field + "' holds a non-number");
    }
    v(i) = j[static_cast<std::size_t>(i)].get<double>();
  }
  return v;
}

template <typename Derived>
nlohmann::json to_array(const Eigen::MatrixBase<Derived>& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

}  // namespace

Demonstration read_demonstration(std::istream& in) {
  Demonstration demo;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      DemoSample s;
      s.t = j.at("t").get<double>();
      s.pos = fixed_vector<3>(j.at("pos"), "pos");
      s.quat = fixed_vector<4>(j.at("quat"), "quat");
      if (j.contains("wrench") && !j["wrench"].is_null()) s.wrench = fixed_vector<6>(j["wrench"], "wrench");
      demo.samples.push_back(s);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return demo;
}

Demonstration load_demonstration(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return read_demonstration(in);
}

void write_demonstration(std::ostream& out, const Demonstration& demo) {
  for (const auto& s : demo.samples) {
    nlohmann::json j;
    j["t"] = s.t;
    j["pos"] = to_array(s.pos);
    j["quat"] = to_array(s.quat);
    if (s.wrench) j["wrench"] = to_array(*s.wrench);
    out << j.dump() << '\n';
  }
}

std::vector<std::filesystem::path> list_demonstration_files(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::IoError, dir.string() + " is not a directory");
  }
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

nlohmann::json pose_to_json(const Vector7d& pose) {
  return {{"pos", to_array(pose.head<3>())}, {"quat", to_array(pose.tail<4>())}};
}

Vector7d pose_from_json(const nlohmann::json& j) {
  Vector7d p;
  p << fixed_vector<3>(j.at("pos"), "pos"), fixed_vector<4>(j.at("quat"), "quat");
  return p;
}

nlohmann::json via_point_to_json(const ViaPoint& via) {
  return {{"id", via.id},
          {"s_bar", via.s_bar},
          {"mu_bar", to_array(via.mu_bar)},
          {"gamma", via.gamma},
          {"source", to_string(via.source)},
          {"span", via.span}};
}

nlohmann::json model_to_json(const KmpModel& model) {
  nlohmann::json refs = nlohmann::json::array();
  for (const auto& r : model.references()) {
    nlohmann::json sigma = nlohmann::json::array();
    for (int i = 0; i < kPoseDim; ++i) sigma.push_back(to_array(r.sigma.row(i).transpose()));
    refs.push_back({{"s", r.s}, {"mu", to_array(r.mu)}, {"sigma", sigma}});
  }
  nlohmann::json vias = nlohmann::json::array();
  for (const auto& v : model.via_points()) vias.push_back(via_point_to_json(v));
  const auto& p = model.params();
  return {{"schema_version", kModelSchemaVersion},
          {"kernel",
           {{"family", p.kernel.family == KernelFamily::matern52 ? "matern52" : "rbf"},
            {"length_scale", p.kernel.length_scale}}},
          {"lambda1", p.lambda1},
          {"lambda2", p.lambda2},
          {"refs", refs},
          {"via_points", vias}};
}

KmpModel model_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("schema_version").get<int>() != kModelSchemaVersion) {
      throw Error(ErrorCode::ParseError, "unsupported model schema version");
    }
    KmpParams params;
    const auto& kernel = doc.at("kernel");
    const auto family = kernel.at("family").get<std::string>();
    if (family == "matern52") {
      params.kernel.family = KernelFamily::matern52;
    } else if (family == "rbf") {
      params.kernel.family = KernelFamily::rbf;
    } else {
      throw Error(ErrorCode::ParseError, "unknown kernel family '" + family + "'");
    }
    params.kernel.length_scale = kernel.at("length_scale").get<double>();
    params.lambda1 = doc.at("lambda1").get<double>();
    params.lambda2 = doc.at("lambda2").get<double>();
    std::vector<ReferencePoint> refs;
    for (const auto& r : doc.at("refs")) {
      ReferencePoint ref;
      ref.s = r.at("s").get<double>();
      ref.mu = fixed_vector<7>(r.at("mu"), "mu");
      const auto& sigma = r.at("sigma");
      if (!sigma.is_array() || sigma.size() != kPoseDim) {
        throw Error(ErrorCode::ParseError, "sigma must be a 7x7 nested array");
      }
      for (int i = 0; i < kPoseDim; ++i) {
        ref.sigma.row(i) = fixed_vector<7>(sigma[static_cast<std::size_t>(i)], "sigma").transpose();
      }
      refs.push_back(ref);
    }
    KmpModel model(std::move(refs), params);
    for (const auto& v : doc.at("via_points")) {
      ViaPoint via;
      via.id = v.at("id").get<int>();
      via.s_bar = v.at("s_bar").get<double>();
      via.mu_bar = fixed_vector<7>(v.at("mu_bar"), "mu_bar");
      via.gamma = v.at("gamma").get<double>();
      via.source = via_source_from_string(v.at("source").get<std::string>());
      via.span = v.value("span", 0.0);
      model.restore_via_point(via);
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("model document: ") + e.what());
  }
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  out << "t,s,x,y,z,qw,qx,qy,qz\n";
  char buf[64];
  for (const auto& p : traj.points) {
    std::snprintf(buf, sizeof buf, "%.9f,%.9f", p.t, p.s);
    out << buf;
    for (int i = 0; i < kPoseDim; ++i) {
      std::snprintf(buf, sizeof buf, ",%.9f", p.pose(i));
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace skilladapt::kmp
