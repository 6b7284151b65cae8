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
#ifndef CLIP2_GEOMETRY_IO_H_
#define CLIP2_GEOMETRY_IO_H_

#include <string>

#include "clip2/geometry.h"

namespace clip2 {

// "PCF1" | u32 count | u8 has_intensity | count x (f32 x, f32 y, f32 z [, f32 intensity])
std::string encode_point_cloud(const PointCloud& cloud);
PointCloud decode_point_cloud(const std::string& bytes);
void write_point_cloud(const PointCloud& cloud, const std::string& path);
PointCloud read_point_cloud(const std::string& path);

// "DEP1" | u32 width | u32 height | width*height f32 depths, row-major.
void write_depth_image(const DepthImage& image, const std::string& path);
DepthImage read_depth_image(const std::string& path);

// Text calibration:
//   intrinsics = 9 numbers (row-major 3x3)
//   camera_extrinsics = 16 numbers (row-major 4x4)
//   lidar_extrinsics = 16 numbers (optional, identity when absent)
// Blank lines and lines starting with '#' are ignored.
std::string format_calibration(const CameraCalibration& calib);
CameraCalibration parse_calibration(const std::string& text);
void write_calibration(const CameraCalibration& calib, const std::string& path);
CameraCalibration read_calibration(const std::string& path);

}  // namespace clip2

#endif  // CLIP2_GEOMETRY_IO_H_
