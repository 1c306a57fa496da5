#include "fa/types.hpp"

#include <array>
#include <utility>

#include "fa/errors.hpp"

namespace fa {

namespace {

template <typename E, std::size_t N>
E parse_enum(std::string_view s, const std::array<std::pair<std::string_view, E>, N>& table,
             std::string_view what) {
  for (const auto& [name, value] : table) {
    if (name == s) return value;
  }
  fail(ErrorKind::InvalidParams, "unknown " + std::string(what) + " '" + std::string(s) + "'");
}

constexpr std::array<std::pair<std::string_view, Label>, 2> kLabels{{
    {"not_fluorescent", Label::not_fluorescent},
    {"fluorescent", Label::fluorescent},
}};
constexpr std::array<std::pair<std::string_view, DistalDirection>, 2> kDistal{{
    {"increasing_x", DistalDirection::increasing_x},
    {"decreasing_x", DistalDirection::decreasing_x},
}};
constexpr std::array<std::pair<std::string_view, Axis>, 2> kAxes{{
    {"horizontal", Axis::horizontal},
    {"vertical", Axis::vertical},
}};
constexpr std::array<std::pair<std::string_view, Split>, 2> kSplits{{
    {"train", Split::train},
    {"holdout", Split::holdout},
}};
constexpr std::array<std::pair<std::string_view, Camera>, 5> kCameras{{
    {"pinpoint", Camera::pinpoint},
    {"stryker1688", Camera::stryker1688},
    {"arthrex", Camera::arthrex},
    {"synthetic", Camera::synthetic},
    {"other", Camera::other},
}};

template <typename E, std::size_t N>
std::string_view name_of(E v, const std::array<std::pair<std::string_view, E>, N>& table) {
  for (const auto& [name, value] : table) {
    if (value == v) return name;
  }
  return "unknown";
}

}  // namespace

std::string_view to_string(Label v) { return name_of(v, kLabels); }
std::string_view to_string(DistalDirection v) { return name_of(v, kDistal); }
std::string_view to_string(Axis v) { return name_of(v, kAxes); }
std::string_view to_string(Split v) { return name_of(v, kSplits); }
std::string_view to_string(Camera v) { return name_of(v, kCameras); }

Label parse_label(std::string_view s) { return parse_enum(s, kLabels, "label"); }
DistalDirection parse_distal(std::string_view s) { return parse_enum(s, kDistal, "distal direction"); }
Axis parse_axis(std::string_view s) { return parse_enum(s, kAxes, "axis"); }
Split parse_split(std::string_view s) { return parse_enum(s, kSplits, "split"); }
Camera parse_camera(std::string_view s) { return parse_enum(s, kCameras, "camera"); }

}  // namespace fa
