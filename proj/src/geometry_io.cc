/**
 * Copyright 2026 The clip2 Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "clip2/geometry_io.h"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <vector>

#include "clip2/binary_io.h"
#include "clip2/errors.h"

namespace clip2 {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path);
  return ss.str();
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path);
}

std::string encode_point_cloud(const PointCloud& cloud) {
  if (cloud.has_intensity() && cloud.intensity.size() != cloud.size()) {
    throw InvalidArgument("point cloud: intensity count does not match point count");
  }
  ByteWriter w;
  w.magic("PCF1");
  w.u32(static_cast<std::uint32_t>(cloud.size()));
  w.u8(cloud.has_intensity() ? 1 : 0);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.points[i];
    w.f32(static_cast<float>(p.x()));
    w.f32(static_cast<float>(p.y()));
    w.f32(static_cast<float>(p.z()));
    if (cloud.has_intensity()) w.f32(cloud.intensity[i]);
  }
  return w.bytes();
}

PointCloud decode_point_cloud(const std::string& bytes) {
  ByteReader r(bytes, "PCF1");
  r.expect_magic("PCF1");
  const std::uint32_t n = r.u32();
  const std::uint8_t flag = r.u8();
  if (flag > 1) throw FormatError("PCF1: bad intensity flag");
  r.require(static_cast<std::uint64_t>(n) * (flag ? 16 : 12));
  PointCloud cloud;
  cloud.points.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    const double x = r.f32(), y = r.f32(), z = r.f32();
    cloud.points.emplace_back(x, y, z);
    if (flag) cloud.intensity.push_back(r.f32());
  }
  r.expect_end();
  return cloud;
}

void write_point_cloud(const PointCloud& cloud, const std::string& path) {
  write_file(path, encode_point_cloud(cloud));
}

PointCloud read_point_cloud(const std::string& path) { return decode_point_cloud(read_file(path)); }

void write_depth_image(const DepthImage& image, const std::string& path) {
  ByteWriter w;
  w.magic("DEP1");
  w.u32(static_cast<std::uint32_t>(image.width));
  w.u32(static_cast<std::uint32_t>(image.height));
  for (double d : image.depth) w.f32(static_cast<float>(d));
  write_file(path, w.bytes());
}

DepthImage read_depth_image(const std::string& path) {
  const std::string bytes = read_file(path);
  ByteReader r(bytes, "DEP1 " + path);
  r.expect_magic("DEP1");
  const std::uint32_t w = r.u32();
  const std::uint32_t h = r.u32();
  if (w == 0 || h == 0 || w > (1u << 16) || h > (1u << 16)) throw FormatError("DEP1: bad dimensions in " + path);
  r.require(static_cast<std::uint64_t>(w) * h * 4);
  DepthImage image(static_cast<int>(w), static_cast<int>(h));
  for (auto& d : image.depth) d = r.f32();
  r.expect_end();
  return image;
}

namespace {

template <typename Matrix>
void put_matrix(std::ostringstream& out, const char* key, const Matrix& m) {
  out << key << " =";
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) out << ' ' << m(r, c);
  }
  out << '\n';
}

template <typename Matrix>
Matrix get_matrix(const std::vector<double>& values, const std::string& key) {
  Matrix m;
  if (values.size() != static_cast<std::size_t>(m.size())) {
    throw FormatError("calibration: " + key + " expects " + std::to_string(m.size()) + " values, got " +
                      std::to_string(values.size()));
  }
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) m(r, c) = values[static_cast<std::size_t>(r * m.cols() + c)];
  }
  return m;
}

}  // namespace

std::string format_calibration(const CameraCalibration& calib) {
  std::ostringstream out;
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  put_matrix(out, "intrinsics", calib.intrinsics);
  put_matrix(out, "camera_extrinsics", calib.camera_extrinsics);
  put_matrix(out, "lidar_extrinsics", calib.lidar_extrinsics);
  return out.str();
}

CameraCalibration parse_calibration(const std::string& text) {
  std::map<std::string, std::vector<double>> entries;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("calibration line " + std::to_string(line_no) + ": missing '='");
    std::string key = line.substr(0, eq);
    key.erase(key.find_last_not_of(" \t") + 1);
    key.erase(0, key.find_first_not_of(" \t"));
    std::istringstream values(line.substr(eq + 1));
    std::vector<double> parsed;
    std::string tok;
    while (values >> tok) {
      try {
        std::size_t used = 0;
        parsed.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw FormatError("calibration line " + std::to_string(line_no) + ": bad number '" + tok + "'");
      }
    }
    if (!entries.emplace(key, std::move(parsed)).second) throw FormatError("calibration: duplicate key " + key);
  }
  CameraCalibration calib;
  for (const auto& [key, values] : entries) {
    if (key == "intrinsics") {
      calib.intrinsics = get_matrix<Eigen::Matrix3d>(values, key);
    } else if (key == "camera_extrinsics") {
      calib.camera_extrinsics = get_matrix<Eigen::Matrix4d>(values, key);
    } else if (key == "lidar_extrinsics") {
      calib.lidar_extrinsics = get_matrix<Eigen::Matrix4d>(values, key);
    } else {
      throw FormatError("calibration: unknown key " + key);
    }
  }
  if (!entries.count("intrinsics")) throw FormatError("calibration: missing intrinsics");
  if (!entries.count("camera_extrinsics")) throw FormatError("calibration: missing camera_extrinsics");
  return calib;
}

void write_calibration(const CameraCalibration& calib, const std::string& path) {
  write_file(path, format_calibration(calib));
}

CameraCalibration read_calibration(const std::string& path) {
  try {
    return parse_calibration(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

}  // namespace clip2
