#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "spatialqa/error.hpp"
#include "spatialqa/metadata.hpp"
#include "spatialqa/ply.hpp"

using namespace spatialqa;

namespace {

const char* kAsciiPly =
    "ply\n"
    "format ascii 1.0\n"
    "comment three labeled points\n"
    "element vertex 3\n"
    "property float x\n"
    "property float y\n"
    "property float z\n"
    "property uchar red\n"
    "property uchar green\n"
    "property uchar blue\n"
    "property int label\n"
    "property int instance\n"
    "end_header\n"
    "0 0 0 255 0 0 3 1\n"
    "1.5 -2 0.25 0 255 0 3 1\n"
    "4 5 6 0 0 255 7 2\n";

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::Io;
}

}  // namespace

TEST(Ply, AsciiFixture) {
  const auto cloud = parse_ply_bytes(kAsciiPly);
  ASSERT_EQ(cloud.points.size(), 3u);
  EXPECT_EQ(cloud.points[1].position, (Vec3{1.5, -2, 0.25}));
  EXPECT_EQ(cloud.points[1].color, (std::array<std::uint8_t, 3>{0, 255, 0}));
  EXPECT_EQ(cloud.points[2].semantic_label, 7);
  EXPECT_EQ(cloud.points[2].instance_label, 2);
}

TEST(Ply, BinaryEqualsAscii) {
  const auto ascii = parse_ply_bytes(kAsciiPly);
  const auto binary = parse_ply_bytes(encode_ply(ascii, PlyEncoding::BinaryLittleEndian));
  EXPECT_EQ(binary.points, ascii.points);
  const auto reascii = parse_ply_bytes(encode_ply(ascii, PlyEncoding::Ascii));
  EXPECT_EQ(reascii.points, ascii.points);
}

TEST(Ply, DoublePrecisionRoundTripIsExact) {
  LabeledPointCloud cloud;
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-100, 100);
  for (int i = 0; i < 50; ++i) cloud.points.push_back({{u(gen), u(gen), u(gen)}, {1, 2, 3}, i % 4, i % 7});
  for (auto enc : {PlyEncoding::Ascii, PlyEncoding::BinaryLittleEndian}) {
    EXPECT_EQ(parse_ply_bytes(encode_ply(cloud, enc, true)).points, cloud.points);
  }
}

TEST(Ply, MissingLabelsDefault) {
  const auto cloud = parse_ply_bytes("ply\nformat ascii 1.0\nelement vertex 1\nproperty double x\n"
                                     "property double y\nproperty double z\nend_header\n1 2 3\n");
  ASSERT_EQ(cloud.points.size(), 1u);
  EXPECT_EQ(cloud.points[0].semantic_label, -1);
  EXPECT_EQ(cloud.points[0].instance_label, 0);
}

TEST(Ply, SkipsFaceElement) {
  const auto cloud = parse_ply_bytes("ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\n"
                                     "property float y\nproperty float z\nelement face 1\n"
                                     "property list uchar int vertex_indices\nend_header\n0 0 0\n1 1 1\n3 0 1 1\n");
  EXPECT_EQ(cloud.points.size(), 2u);
}

TEST(Ply, Errors) {
  std::string truncated = kAsciiPly;
  truncated.replace(truncated.find("vertex 3"), 8, "vertex 4");
  EXPECT_EQ(code_of([&] { parse_ply_bytes(truncated); }), ErrorCode::TruncatedBody);

  std::string big = kAsciiPly;
  big.replace(big.find("ascii"), 5, "binary_big_endian");
  EXPECT_EQ(code_of([&] { parse_ply_bytes(big); }), ErrorCode::UnsupportedEncoding);

  EXPECT_EQ(code_of([] { parse_ply_bytes("plx\nformat ascii 1.0\nend_header\n"); }), ErrorCode::MalformedHeader);
  EXPECT_EQ(code_of([] { parse_ply_bytes("ply\nformat ascii 1.0\nelement vertex 1\n"); }), ErrorCode::MalformedHeader);

  const std::string binary = encode_ply(parse_ply_bytes(kAsciiPly), PlyEncoding::BinaryLittleEndian);
  EXPECT_EQ(code_of([&] { parse_ply_bytes(binary.substr(0, binary.size() - 3)); }), ErrorCode::TruncatedBody);
}

TEST(Ply, ErrorsCarryByteOffset) {
  try {
    parse_ply_bytes("ply\nformat nonsense 1.0\nend_header\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("byte offset 4"), std::string::npos) << e.what();
  }
}

TEST(InstanceBoxes, UniformCubeCluster) {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(0, 1);
  LabeledPointCloud cloud;
  Vec3 lo{1, 1, 1}, hi{0, 0, 0};
  for (int i = 0; i < 100; ++i) {
    const Vec3 p{u(gen), u(gen), u(gen)};
    for (int k = 0; k < 3; ++k) lo[k] = std::min(lo[k], p[k]), hi[k] = std::max(hi[k], p[k]);
    cloud.points.push_back({p, {0, 0, 0}, 4, 1});
  }
  const auto res = derive_instance_boxes(cloud, {{4, "box"}});
  ASSERT_EQ(res.instances.size(), 1u);
  const auto& b = res.instances[0].box;
  for (int k = 0; k < 3; ++k) {
    EXPECT_NEAR(b.center[k], 0.5 * (lo[k] + hi[k]), 1e-12);
    EXPECT_NEAR(b.size[k], hi[k] - lo[k], 1e-12);
    EXPECT_NEAR(b.center[k], 0.5, 0.1);
    EXPECT_NEAR(b.size[k], 1.0, 0.1);
  }
}

TEST(InstanceBoxes, SeparateClustersAndFilters) {
  LabeledPointCloud cloud;
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 60; ++i) cloud.points.push_back({{u(gen), u(gen), u(gen)}, {}, 1, 1});
  for (int i = 0; i < 60; ++i) cloud.points.push_back({{5 + u(gen), u(gen), u(gen)}, {}, 2, 2});
  for (int i = 0; i < 10; ++i) cloud.points.push_back({{9, 9, u(gen)}, {}, 1, 3});     // too few
  for (int i = 0; i < 60; ++i) cloud.points.push_back({{u(gen), 8, u(gen)}, {}, 99, 4});  // unmapped
  const auto res = derive_instance_boxes(cloud, {{1, "chair"}, {2, "table"}});
  ASSERT_EQ(res.instances.size(), 2u);
  EXPECT_EQ(res.instances[0].category, "chair");
  EXPECT_EQ(res.instances[1].category, "table");
  EXPECT_FALSE(boxes_overlap(res.instances[0].box, res.instances[1].box));
  EXPECT_EQ(res.dropped_small, 1);
  EXPECT_EQ(res.dropped_unlabeled, 1);

  EXPECT_EQ(code_of([&] { derive_instance_boxes(cloud, {}, {}); }), ErrorCode::EmptyAfterFiltering);
}

TEST(Metadata, MinimalFixture) {
  const auto doc = nlohmann::json::parse(R"({
    "scene_id": "s0",
    "scene_extents": {"min": [0, 0, 0], "max": [4, 5, 3]},
    "room_center": [2, 2.5, 1.5],
    "category_counts": {"sofa": 1},
    "objects": [{"instance_id": 3, "category": "sofa", "center": [1, 1, 0.4],
                 "size": [2, 0.9, 0.8], "rotation": [1, 0, 0, 0]}],
    "provenance": "ignored"
  })");
  const auto scene = scene_metadata_from_json(doc);
  ASSERT_EQ(scene.objects.size(), 1u);
  EXPECT_EQ(scene.objects[0].box.size, (Vec3{2, 0.9, 0.8}));

  const auto frames = nlohmann::json::parse(R"({
    "scene_id": "s0",
    "intrinsics": {"fx": 500, "fy": 500, "cx": 320, "cy": 240, "width": 640, "height": 480},
    "frames": [
      {"frame_id": 0, "pose_c2w": [1,0,0,0, 0,1,0,0, 0,0,1,0, 0,0,0,1], "color_path": "c0", "depth_path": "d0",
       "visible_objects": [{"instance_id": 3, "bbox_2d": [10, 10, 50, 60]}]},
      {"frame_id": 4, "pose_c2w": [1,0,0,2, 0,1,0,0, 0,0,1,0, 0,0,0,1], "color_path": "c4", "depth_path": "d4",
       "visible_objects": []}
    ]
  })");
  const auto fm = frame_metadata_from_json(frames);
  ASSERT_EQ(fm.frames.size(), 2u);
  EXPECT_EQ(fm.frames[1].pose.translation, (Vec3{2, 0, 0}));
}

TEST(Metadata, ReflectedPoseIsRejectedWithPath) {
  const auto doc = nlohmann::json::parse(R"({
    "scene_id": "s0",
    "intrinsics": {"fx": 500, "fy": 500, "cx": 320, "cy": 240, "width": 640, "height": 480},
    "frames": [{"frame_id": 0, "pose_c2w": [-1,0,0,0, 0,1,0,0, 0,0,1,0, 0,0,0,1], "color_path": "c",
                "depth_path": "d", "visible_objects": []}]
  })");
  try {
    frame_metadata_from_json(doc);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SchemaViolation);
    EXPECT_NE(e.detail().find("pose.rotation"), std::string::npos) << e.detail();
  }
}

TEST(Metadata, SchemaViolations) {
  auto scene = to_json(fx::scene({fx::object(1, "chair", {0, 0, 0}), fx::object(2, "chair", {3, 0, 0})}));
  auto expect_violation = [](const nlohmann::json& doc, const std::string& path) {
    try {
      scene_metadata_from_json(doc);
      ADD_FAILURE() << "accepted " << path;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::SchemaViolation);
      EXPECT_EQ(e.detail().rfind(path, 0), 0u) << e.detail();
    }
  };
  auto bad = scene;
  bad["category_counts"]["chair"] = 3;
  expect_violation(bad, "category_counts");
  bad = scene;
  bad["objects"][1]["instance_id"] = 1;
  expect_violation(bad, "objects[1].instance_id");
  bad = scene;
  bad["objects"][0]["size"] = {1, 0, 1};
  expect_violation(bad, "objects[0].size");
  bad = scene;
  bad["objects"][0]["rotation"] = {2, 0, 0, 0};
  expect_violation(bad, "objects[0].rotation");
  bad = scene;
  bad.erase("room_center");
  expect_violation(bad, "room_center");
}

TEST(Metadata, RandomizedRoundTrip) {
  std::mt19937_64 gen(42);
  std::uniform_real_distribution<double> u(-5, 5), s(0.1, 3), yaw(-180, 180);
  const char* cats[] = {"chair", "table", "lamp", "bed"};
  for (int doc = 0; doc < 50; ++doc) {
    std::vector<ObjectInstance> objects;
    const int n = 1 + static_cast<int>(gen() % 8);
    for (int i = 0; i < n; ++i) {
      objects.push_back(fx::object(10 + i, cats[gen() % 4], {u(gen), u(gen), u(gen)}, {s(gen), s(gen), s(gen)}, yaw(gen)));
    }
    const auto scene = fx::scene(objects, "doc" + std::to_string(doc));
    const auto text = dump_document(to_json(scene));
    const auto again = scene_metadata_from_json(nlohmann::json::parse(text));
    EXPECT_EQ(again, scene);
    EXPECT_EQ(dump_document(to_json(again)), text);

    std::vector<CameraFrame> list;
    for (int f = 0; f < 3; ++f) {
      Pose p{Mat3::rotation_z(deg_to_rad(yaw(gen))), {u(gen), u(gen), u(gen)}};
      list.push_back(fx::frame(f * 3, p, {10}));
    }
    const auto fm = fx::frames(scene.scene_id, list);
    EXPECT_EQ(frame_metadata_from_json(nlohmann::json::parse(dump_document(to_json(fm)))), fm);
  }
}

TEST(Metadata, FrameIdsMustIncrease) {
  auto fm = to_json(fx::frames("s", {fx::frame(5, Pose{}), fx::frame(5, Pose{})}));
  EXPECT_EQ(code_of([&] { frame_metadata_from_json(fm); }), ErrorCode::SchemaViolation);
}
