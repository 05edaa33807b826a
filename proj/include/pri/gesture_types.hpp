#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>

namespace pri {

/// The 12-gesture dictionary (watch worn on the dominant wrist).
enum class GestureClass : int { Up, Down, Left, Right, CW, CCW, Z, AZ, S, AS, Push, Pull };

inline constexpr std::size_t kNumGestureClasses = 12;

inline constexpr std::array<GestureClass, kNumGestureClasses> kAllGestures = {
    GestureClass::Up, GestureClass::Down, GestureClass::Left, GestureClass::Right,
    GestureClass::CW, GestureClass::CCW,  GestureClass::Z,    GestureClass::AZ,
    GestureClass::S,  GestureClass::AS,   GestureClass::Push, GestureClass::Pull};

inline constexpr std::array<std::string_view, kNumGestureClasses> kGestureNames = {
    "UP", "DOWN", "LEFT", "RIGHT", "CW", "CCW", "Z", "AZ", "S", "AS", "PUSH", "PULL"};

inline std::string_view to_string(GestureClass g) { return kGestureNames[static_cast<std::size_t>(g)]; }

inline std::optional<GestureClass> parse_gesture(std::string_view name) {
  for (std::size_t i = 0; i < kNumGestureClasses; ++i) {
    if (kGestureNames[i] == name) return static_cast<GestureClass>(i);
  }
  return std::nullopt;
}

inline std::size_t index_of(GestureClass g) { return static_cast<std::size_t>(g); }

/// A localized gesture instance on the ACC clock; `end` is exclusive.
struct GestureWindow {
  std::size_t start = 0;
  std::size_t end = 0;
  GestureClass label = GestureClass::Up;
  double confidence = 1.0;

  std::size_t length() const { return end - start; }
  bool operator==(const GestureWindow&) const = default;
};

}  // namespace pri
