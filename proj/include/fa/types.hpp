#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace fa {

enum class Label { not_fluorescent, fluorescent };

enum class DistalDirection { increasing_x, decreasing_x };

enum class Axis { horizontal, vertical };

enum class Split { train, holdout };

enum class Camera { pinpoint, stryker1688, arthrex, synthetic, other };

std::string_view to_string(Label v);
std::string_view to_string(DistalDirection v);
std::string_view to_string(Axis v);
std::string_view to_string(Split v);
std::string_view to_string(Camera v);

// Parsers throw fa::Error(InvalidParams) on unknown names.
Label parse_label(std::string_view s);
DistalDirection parse_distal(std::string_view s);
Axis parse_axis(std::string_view s);
Split parse_split(std::string_view s);
Camera parse_camera(std::string_view s);

}  // namespace fa
