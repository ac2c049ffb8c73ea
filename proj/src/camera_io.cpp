#include "fisheye/camera_io.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <set>
#include <stdexcept>

namespace fisheye {

namespace {

using nlohmann::json;

void require_keys(const json& obj, const std::set<std::string>& required,
                  const std::set<std::string>& optional, const char* where) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (!required.count(key) && !optional.count(key))
      throw std::runtime_error(std::string(where) + ": unknown key \"" + key +
                               "\"");
  }
  for (const auto& key : required)
    if (!obj.contains(key))
      throw std::runtime_error(std::string(where) + ": missing key \"" + key +
                               "\"");
}

double finite_number(const json& j, const std::string& key,
                     const char* where) {
  if (!j.at(key).is_number())
    throw std::runtime_error(std::string(where) + ": \"" + key +
                             "\" must be a number");
  const double v = j.at(key).get<double>();
  if (!std::isfinite(v))
    throw std::runtime_error(std::string(where) + ": \"" + key +
                             "\" must be finite");
  return v;
}

// Collects p1..pN with a given prefix; the indices must be contiguous from 1.
std::vector<double> indexed_params(const json& params,
                                   const std::string& prefix,
                                   std::size_t max_count) {
  std::vector<double> values;
  for (std::size_t i = 1; i <= max_count; ++i) {
    const std::string key = prefix + std::to_string(i);
    if (!params.contains(key)) break;
    values.push_back(finite_number(params, key, "camera params"));
  }
  return values;
}

}  // namespace

nlohmann::json camera_to_json(const Camerad& intr) {
  json params;
  std::visit(
      [&](const auto& mm) {
        using M = std::decay_t<decltype(mm)>;
        if constexpr (std::is_same_v<M, Pinhole<double>> ||
                      std::is_same_v<M, Equidistant<double>> ||
                      std::is_same_v<M, Stereographic<double>> ||
                      std::is_same_v<M, Orthographic<double>>) {
          params["f"] = mm.f;
        } else if constexpr (std::is_same_v<M, ExtendedOrthographic<double>> ||
                             std::is_same_v<M, ExtendedEquidistant<double>>) {
          params["f"] = mm.f;
          params["lambda"] = mm.lambda;
        } else if constexpr (std::is_same_v<M, PolynomialOdd<double>>) {
          for (std::size_t i = 0; i < mm.k.size(); ++i)
            params["k" + std::to_string(i + 1)] = mm.k[i];
          params["theta_max"] = mm.theta_max;
        } else if constexpr (std::is_same_v<M, PolynomialMixed<double>>) {
          for (std::size_t i = 0; i < mm.a.size(); ++i)
            params["a" + std::to_string(i + 1)] = mm.a[i];
          params["theta_max"] = mm.theta_max;
        } else if constexpr (std::is_same_v<M, OnImagePolynomial<double>>) {
          for (std::size_t i = 0; i < mm.c.size(); ++i)
            params["c" + std::to_string(i + 1)] = mm.c[i];
          params["theta_max"] = mm.theta_max;
        } else if constexpr (std::is_same_v<M, Division<double>>) {
          params["a"] = mm.a;
          params["f"] = mm.f;
        } else if constexpr (std::is_same_v<M, FieldOfView<double>>) {
          params["omega"] = mm.omega;
          params["f"] = mm.f;
        } else if constexpr (std::is_same_v<M, Ucm<double>>) {
          params["alpha"] = mm.alpha;
          params["f"] = mm.f;
        } else if constexpr (std::is_same_v<M, Eucm<double>>) {
          params["alpha"] = mm.alpha;
          params["beta"] = mm.beta;
          params["f"] = mm.f;
        } else if constexpr (std::is_same_v<M, DoubleSphere<double>>) {
          params["xi"] = mm.xi;
          params["alpha"] = mm.alpha;
          params["f"] = mm.f;
        } else if constexpr (std::is_same_v<M, GeneralPerspective<double>>) {
          params["f_p"] = mm.f_p;
          params["f_s"] = mm.f_s;
          params["d"] = mm.d;
        }
      },
      intr.model);
  return json{{"model", to_string(model_kind(intr.model))},
              {"params", params},
              {"cx", intr.cx},
              {"cy", intr.cy},
              {"pixel_scale", intr.pixel_scale},
              {"width", intr.width},
              {"height", intr.height}};
}

Camerad camera_from_json(const nlohmann::json& j) {
  require_keys(j, {"model", "params", "cx", "cy", "pixel_scale", "width",
                   "height"},
               {}, "camera file");
  if (!j.at("model").is_string())
    throw std::runtime_error("camera file: \"model\" must be a string");
  const ModelKind kind = kind_from_string(j.at("model").get<std::string>());
  const json& params = j.at("params");
  if (!params.is_object())
    throw std::runtime_error("camera file: \"params\" must be an object");

  const auto num = [&](const char* key) {
    return finite_number(params, key, "camera params");
  };
  const auto check_param_keys = [&](std::set<std::string> required,
                                    std::set<std::string> optional = {}) {
    require_keys(params, required, optional, "camera params");
  };

  ModelParamsd model = Pinhole<double>{1.0};
  switch (kind) {
    case ModelKind::Pinhole:
      check_param_keys({"f"});
      model = Pinhole<double>{num("f")};
      break;
    case ModelKind::Equidistant:
      check_param_keys({"f"});
      model = Equidistant<double>{num("f")};
      break;
    case ModelKind::Stereographic:
      check_param_keys({"f"});
      model = Stereographic<double>{num("f")};
      break;
    case ModelKind::Orthographic:
      check_param_keys({"f"});
      model = Orthographic<double>{num("f")};
      break;
    case ModelKind::ExtendedOrthographic:
      check_param_keys({"f", "lambda"});
      model = ExtendedOrthographic<double>{num("f"), num("lambda")};
      break;
    case ModelKind::ExtendedEquidistant:
      check_param_keys({"f", "lambda"});
      model = ExtendedEquidistant<double>{num("f"), num("lambda")};
      break;
    case ModelKind::PolynomialOdd: {
      const auto k = indexed_params(params, "k", 5);
      std::set<std::string> req;
      for (std::size_t i = 1; i <= k.size(); ++i)
        req.insert("k" + std::to_string(i));
      check_param_keys(req, {"theta_max"});
      PolynomialOdd<double> m{k};
      if (params.contains("theta_max"))
        m.theta_max = num("theta_max");
      model = m;
      break;
    }
    case ModelKind::PolynomialMixed: {
      check_param_keys({"a1", "a2", "a3", "a4"}, {"theta_max"});
      PolynomialMixed<double> m{{num("a1"), num("a2"), num("a3"), num("a4")}};
      if (params.contains("theta_max")) m.theta_max = num("theta_max");
      model = m;
      break;
    }
    case ModelKind::OnImagePolynomial: {
      const auto c = indexed_params(params, "c", 16);
      std::set<std::string> req;
      for (std::size_t i = 1; i <= c.size(); ++i)
        req.insert("c" + std::to_string(i));
      check_param_keys(req, {"theta_max"});
      OnImagePolynomial<double> m{c};
      if (params.contains("theta_max")) m.theta_max = num("theta_max");
      model = m;
      break;
    }
    case ModelKind::Division:
      check_param_keys({"a", "f"});
      model = Division<double>{num("a"), num("f")};
      break;
    case ModelKind::FieldOfView:
      check_param_keys({"omega", "f"});
      model = FieldOfView<double>{num("omega"), num("f")};
      break;
    case ModelKind::Ucm:
      check_param_keys({"alpha", "f"});
      model = Ucm<double>{num("alpha"), num("f")};
      break;
    case ModelKind::Eucm:
      check_param_keys({"alpha", "beta", "f"});
      model = Eucm<double>{num("alpha"), num("beta"), num("f")};
      break;
    case ModelKind::DoubleSphere:
      check_param_keys({"xi", "alpha", "f"});
      model = DoubleSphere<double>{num("xi"), num("alpha"), num("f")};
      break;
    case ModelKind::GeneralPerspective:
      check_param_keys({"f_p", "f_s", "d"});
      model = GeneralPerspective<double>{num("f_p"), num("f_s"), num("d")};
      break;
  }

  const double cx = finite_number(j, "cx", "camera file");
  const double cy = finite_number(j, "cy", "camera file");
  const double scale = finite_number(j, "pixel_scale", "camera file");
  if (!j.at("width").is_number_integer() ||
      !j.at("height").is_number_integer())
    throw std::runtime_error("camera file: width/height must be integers");
  return Camerad(model, cx, cy, scale, j.at("width").get<int>(),
                 j.at("height").get<int>());
}

Camerad load_camera(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("camera file: cannot open " + path);
  json j;
  in >> j;
  return camera_from_json(j);
}

void save_camera(const Camerad& intr, std::ostream& out) {
  out << camera_to_json(intr).dump(2) << "\n";
}

void save_camera(const Camerad& intr, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("camera file: cannot open " + path);
  save_camera(intr, out);
}

RelativePosed pose_from_json(const nlohmann::json& j) {
  require_keys(j, {"rotation", "translation"}, {}, "pose file");
  const auto& rj = j.at("rotation");
  const auto& tj = j.at("translation");
  if (!rj.is_array() || rj.size() != 3 || !tj.is_array() || tj.size() != 3)
    throw std::runtime_error("pose file: rotation must be 3x3, translation 3");
  Mat3d r;
  for (int i = 0; i < 3; ++i) {
    if (!rj[i].is_array() || rj[i].size() != 3)
      throw std::runtime_error("pose file: rotation must be 3x3");
    for (int k = 0; k < 3; ++k) r(i, k) = rj[i][k].get<double>();
  }
  Vec3d t;
  for (int i = 0; i < 3; ++i) t(i) = tj[i].get<double>();
  if (!r.allFinite() || !t.allFinite())
    throw std::runtime_error("pose file: non-finite entries");
  return RelativePosed(r, t);
}

RelativePosed load_relative_pose(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("pose file: cannot open " + path);
  json j;
  in >> j;
  return pose_from_json(j);
}

}  // namespace fisheye
