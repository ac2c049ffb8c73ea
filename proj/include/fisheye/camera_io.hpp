#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "fisheye/epipolar.hpp"
#include "fisheye/intrinsics.hpp"

namespace fisheye {

/// Camera file schema:
///   {"model": kind, "params": {name: number, ...},
///    "cx": px, "cy": px, "pixel_scale": s, "width": int, "height": int}
/// Unknown keys are rejected and all numbers must be finite.
nlohmann::json camera_to_json(const Camerad& intr);
Camerad camera_from_json(const nlohmann::json& j);

Camerad load_camera(const std::string& path);
void save_camera(const Camerad& intr, std::ostream& out);
void save_camera(const Camerad& intr, const std::string& path);

/// Pose file schema: {"rotation": [[..],[..],[..]], "translation": [x,y,z]}.
RelativePosed pose_from_json(const nlohmann::json& j);
RelativePosed load_relative_pose(const std::string& path);

}  // namespace fisheye
