// Tile-grid levels for the deterministic Zelda variant, plus the ASCII level format.
#pragma once

#include <algorithm>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pinsky {

enum class Tile : std::uint8_t { floor, wall, key, door, monster, avatar };

inline constexpr int kTileKinds = 6;

enum class Variant : std::uint8_t { singleDoor, multiDoor };

struct Cell {
  int row = 0;
  int col = 0;

  friend constexpr bool operator==(const Cell&, const Cell&) = default;
  friend constexpr auto operator<=>(const Cell&, const Cell&) = default;
};

inline constexpr int manhattan(Cell a, Cell b) {
  return (a.row > b.row ? a.row - b.row : b.row - a.row) +
         (a.col > b.col ? a.col - b.col : b.col - a.col);
}

class LevelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline char tile_char(Tile t) {
  switch (t) {
    case Tile::floor: return '.';
    case Tile::wall: return 'w';
    case Tile::key: return '+';
    case Tile::door: return 'g';
    case Tile::monster: return '3';
    case Tile::avatar: return 'A';
  }
  return '?';
}

inline bool tile_from_char(char c, Tile& out) {
  switch (c) {
    case '.': out = Tile::floor; return true;
    case 'w': out = Tile::wall; return true;
    case '+': out = Tile::key; return true;
    case 'g': out = Tile::door; return true;
    case '3': out = Tile::monster; return true;
    case 'A': out = Tile::avatar; return true;
    default: return false;
  }
}

inline std::string_view variant_name(Variant v) {
  return v == Variant::singleDoor ? "singleDoor" : "multiDoor";
}

inline Variant parse_variant(std::string_view s) {
  if (s == "singleDoor") return Variant::singleDoor;
  if (s == "multiDoor") return Variant::multiDoor;
  throw LevelError("unknown level variant '" + std::string(s) + "'");
}

/// A dZelda map. The genome is the tile grid itself, so a Level is both what
/// gets mutated and what gets played. Cells are stored row-major.
class Level {
 public:
  Level() = default;

  /// Empty room: wall border, floor interior, no objects. Not valid until an
  /// avatar, a key and a door are placed.
  Level(int width, int height, Variant variant)
      : width_(width), height_(height), variant_(variant),
        cells_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), Tile::floor) {
    if (width < 3 || height < 3) throw LevelError("level must be at least 3x3");
    for (int r = 0; r < height; ++r)
      for (int c = 0; c < width; ++c)
        if (is_border({r, c})) at({r, c}) = Tile::wall;
  }

  int width() const { return width_; }
  int height() const { return height_; }
  Variant variant() const { return variant_; }
  void set_variant(Variant v) { variant_ = v; }

  bool in_bounds(Cell p) const {
    return p.row >= 0 && p.col >= 0 && p.row < height_ && p.col < width_;
  }
  bool is_border(Cell p) const {
    return p.row == 0 || p.col == 0 || p.row == height_ - 1 || p.col == width_ - 1;
  }

  Tile& at(Cell p) { return cells_[index(p)]; }
  Tile at(Cell p) const { return cells_[index(p)]; }
  std::size_t index(Cell p) const {
    return static_cast<std::size_t>(p.row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(p.col);
  }
  const std::vector<Tile>& cells() const { return cells_; }

  /// All cells holding `t`, in row-major order.
  std::vector<Cell> find(Tile t) const {
    std::vector<Cell> out;
    for (int r = 0; r < height_; ++r)
      for (int c = 0; c < width_; ++c)
        if (at({r, c}) == t) out.push_back({r, c});
    return out;
  }

  int count(Tile t) const {
    return static_cast<int>(std::count(cells_.begin(), cells_.end(), t));
  }

  int interior_wall_count() const {
    int n = 0;
    for (int r = 1; r + 1 < height_; ++r)
      for (int c = 1; c + 1 < width_; ++c)
        if (at({r, c}) == Tile::wall) ++n;
    return n;
  }

  Cell avatar_spawn() const {
    auto a = find(Tile::avatar);
    if (a.empty()) throw LevelError("level has no avatar spawn");
    return a.front();
  }

  /// Empty string when valid, otherwise a description of the first violated invariant.
  std::string violation() const {
    if (width_ < 3 || height_ < 3) return "level must be at least 3x3";
    if (cells_.size() != static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_))
      return "cell count does not match dimensions";
    for (int r = 0; r < height_; ++r)
      for (int c = 0; c < width_; ++c)
        if (is_border({r, c}) && at({r, c}) != Tile::wall) {
          std::ostringstream os;
          os << "border cell (" << r << "," << c << ") is '" << tile_char(at({r, c}))
             << "', expected wall";
          return os.str();
        }
    const int avatars = count(Tile::avatar);
    if (avatars != 1) return "expected exactly one avatar spawn, found " + std::to_string(avatars);
    if (count(Tile::key) < 1) return "level needs at least one key";
    const int doors = count(Tile::door);
    if (doors < 1) return "level needs at least one door";
    if (variant_ == Variant::singleDoor && doors != 1)
      return "singleDoor level must have exactly one door, found " + std::to_string(doors);
    return {};
  }

  bool valid() const { return violation().empty(); }

  void validate() const {
    if (auto v = violation(); !v.empty()) throw LevelError("invalid level: " + v);
  }

  friend bool operator==(const Level&, const Level&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  Variant variant_ = Variant::singleDoor;
  std::vector<Tile> cells_;
};

// Level text format:
//   line 1: "<W> <H> <variant>"
//   then H lines of exactly W tile characters, each terminated by '\n'.

inline std::string serialize_level(const Level& level) {
  std::string out = std::to_string(level.width()) + " " + std::to_string(level.height()) + " " +
                    std::string(variant_name(level.variant())) + "\n";
  out.reserve(out.size() + static_cast<std::size_t>((level.width() + 1) * level.height()));
  for (int r = 0; r < level.height(); ++r) {
    for (int c = 0; c < level.width(); ++c) out.push_back(tile_char(level.at({r, c})));
    out.push_back('\n');
  }
  return out;
}

/// Parses the canonical text format and validates the result.
inline Level parse_level(std::string_view text) {
  std::size_t pos = 0;
  auto next_line = [&](std::string_view& line) {
    if (pos >= text.size()) return false;
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) throw LevelError("level text: missing final newline");
    line = text.substr(pos, nl - pos);
    pos = nl + 1;
    return true;
  };

  std::string_view header;
  if (!next_line(header)) throw LevelError("level text: empty input");
  std::istringstream hs{std::string(header)};
  int w = 0, h = 0;
  std::string variant, extra;
  if (!(hs >> w >> h >> variant) || (hs >> extra))
    throw LevelError("level text: header must be '<W> <H> <variant>'");
  if (header != std::to_string(w) + " " + std::to_string(h) + " " + variant)
    throw LevelError("level text: non-canonical header '" + std::string(header) + "'");
  if (w < 3 || h < 3 || w > 4096 || h > 4096)
    throw LevelError("level text: dimensions out of range");

  Level level(w, h, parse_variant(variant));
  for (int r = 0; r < h; ++r) {
    std::string_view line;
    if (!next_line(line))
      throw LevelError("level text: expected " + std::to_string(h) + " rows, got " +
                       std::to_string(r));
    if (static_cast<int>(line.size()) != w)
      throw LevelError("level text: row " + std::to_string(r) + " has " +
                       std::to_string(line.size()) + " chars, expected " + std::to_string(w));
    for (int c = 0; c < w; ++c) {
      Tile t;
      if (!tile_from_char(line[static_cast<std::size_t>(c)], t))
        throw LevelError("level text: unknown tile '" +
                         std::string(1, line[static_cast<std::size_t>(c)]) + "' at row " +
                         std::to_string(r) + " col " + std::to_string(c));
      level.at({r, c}) = t;
    }
  }
  if (pos != text.size()) throw LevelError("level text: trailing data after grid");
  level.validate();
  return level;
}

/// Seed level used when a run is not given one: avatar, key and door spread
/// along the interior of an otherwise empty room.
inline Level default_seed_level(int width, int height, Variant variant) {
  Level level(width, height, variant);
  if (width < 5 || height < 4) throw LevelError("default seed level needs at least 5x4");
  const int mid = height / 2;
  level.at({mid, 1}) = Tile::avatar;
  level.at({1, width / 2}) = Tile::key;
  level.at({height - 2, width - 2}) = Tile::door;
  level.validate();
  return level;
}

}  // namespace pinsky
