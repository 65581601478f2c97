#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <sstream>
#include <string>

#include "tilekit/errors.hpp"
#include "tilekit/layers.hpp"

using namespace tilekit;

namespace {

std::vector<LayerRow> rows_from(const std::string& text) {
  std::istringstream in(text);
  return load_layer_rows(in, "test.csv");
}

std::string data_path(const char* file) {
  const char* dir = std::getenv("TILEKIT_DATA");
  return (dir ? std::string(dir) : std::string("../data")) + "/" + file;
}

}  // namespace

TEST_CASE("layer tables parse header, comments and rows") {
  const auto rows = rows_from(
      "# convnet excerpt\n"
      "Layer,Window,Stride,Input,Output\n"
      "\n"
      "conv1_1, 3, 1, 224x224x3,  224x224x64\n"
      "pooled_conv, 3, 2, 112x112x64, 56x56x64\n");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].layer == "conv1_1");
  CHECK(rows[0].window == 3);
  CHECK(rows[0].stride == 1);
  CHECK(rows[0].input == std::array<std::size_t, 3>{224, 224, 3});
  CHECK(rows[0].output == std::array<std::size_t, 3>{224, 224, 64});
}

TEST_CASE("to_shape infers padding from the stated output") {
  LayerRow same;
  same.layer = "same";
  same.window = 3;
  same.stride = 1;
  same.input = {56, 56, 128};
  same.output = {56, 56, 256};
  const ConvShape s = same.to_shape();
  CHECK(s.padding == Padding::Same);
  CHECK(s.channels == 128);
  CHECK(s.features == 256);
  CHECK(s.out_rows() == 56);

  LayerRow valid;
  valid.layer = "valid";
  valid.window = 3;
  valid.stride = 1;
  valid.input = {10, 10, 4};
  valid.output = {8, 8, 6};
  CHECK(valid.to_shape().padding == Padding::Valid);
  CHECK(valid.to_shape().out_rows() == 8);

  LayerRow strided;
  strided.layer = "stem";
  strided.window = 7;
  strided.stride = 2;
  strided.input = {224, 224, 3};
  strided.output = {112, 112, 64};
  const ConvShape stem = strided.to_shape(8);
  CHECK(stem.padding == Padding::Same);
  CHECK(stem.batch == 8);
  CHECK(stem.out_rows() == 112);
}

TEST_CASE("layer tables reject structural problems by name and position") {
  CHECK_THROWS_MATCHES(
      rows_from("Layer,Window,Input,Output\n"), ParseError,
      Catch::Matchers::MessageMatches(
          Catch::Matchers::ContainsSubstring("missing column Stride")));

  CHECK_THROWS_MATCHES(
      rows_from(
          "Layer,Window,Stride,Input,Output\nconv,3,1,224x224,224x224x64\n"),
      ParseError,
      Catch::Matchers::MessageMatches(
          Catch::Matchers::ContainsSubstring("expected HxWxC dims")));

  CHECK_THROWS_MATCHES(
      rows_from("Layer,Window,Stride,Input,Output\nconv,3,zero,8x8x1,8x8x1\n"),
      ParseError,
      Catch::Matchers::MessageMatches(
          Catch::Matchers::ContainsSubstring("column Stride")));

  CHECK_THROWS_MATCHES(
      rows_from("Layer,Window,Stride,Input,Output\nconv,3,1,8x8x1\n"),
      ParseError,
      Catch::Matchers::MessageMatches(
          Catch::Matchers::ContainsSubstring("expected 5 columns")));

  // Line numbers count physical lines including comments.
  CHECK_THROWS_MATCHES(
      rows_from("# prologue\nLayer,Window,Stride,Input,Output\nconv,0,1,"
                "8x8x1,8x8x1\n"),
      ParseError,
      Catch::Matchers::MessageMatches(
          Catch::Matchers::ContainsSubstring("test.csv:3")));

  CHECK_THROWS_AS(rows_from(""), ParseError);
}

TEST_CASE("layer tables reject outputs no padding can produce") {
  CHECK_THROWS_MATCHES(
      rows_from("Layer,Window,Stride,Input,Output\n"
                "conv,3,1,16x16x8,13x13x8\n"),
      ParseError,
      Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring(
          "matches neither same nor valid padding")));
}

TEST_CASE("serialize_layer_rows inverts the parser") {
  const std::string text =
      "Layer,Window,Stride,Input,Output\n"
      "conv1,3,1,224x224x3,224x224x64\n"
      "stem,7,2,224x224x3,112x112x64\n"
      "reduce,1,1,56x56x256,56x56x64\n";
  const auto rows = rows_from(text);
  CHECK(serialize_layer_rows(rows) == text);
}

TEST_CASE("the bundled VGG table loads") {
  const auto rows = load_layer_rows(data_path("vgg_layers.csv"));
  REQUIRE(rows.size() == 9);
  CHECK(rows[0].layer == "vgg_conv1_1");
  CHECK(rows[0].input == std::array<std::size_t, 3>{224, 224, 3});

  const auto shapes = load_layers(data_path("vgg_layers.csv"), 4);
  REQUIRE(shapes.size() == 9);
  for (const ConvShape& s : shapes) {
    CHECK(s.batch == 4);
    CHECK(s.padding == Padding::Same);
    CHECK(s.window_rows == 3);
    CHECK(s.stride == 1);
  }
}

TEST_CASE("the bundled ResNet table loads") {
  const auto rows = load_layer_rows(data_path("resnet_layers.csv"));
  REQUIRE(rows.size() == 21);
  CHECK(rows[0].layer == "resnet_conv1");
  CHECK(rows[0].window == 7);
  CHECK(rows[0].stride == 2);

  const ConvShape stem = rows[0].to_shape();
  CHECK(stem.padding == Padding::Same);
  CHECK(stem.out_rows() == 112);
  CHECK(stem.pad_top() == 2);

  // The table mixes 1x1, 3x3 and strided layers.
  bool saw_pointwise = false, saw_strided = false;
  for (const LayerRow& row : rows) {
    saw_pointwise |= row.window == 1;
    saw_strided |= row.stride == 2;
  }
  CHECK(saw_pointwise);
  CHECK(saw_strided);
}

TEST_CASE("missing layer files raise IO errors") {
  CHECK_THROWS_AS(load_layer_rows("no_such_layers.csv"), IoError);
}
