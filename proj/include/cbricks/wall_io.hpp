#pragma once

#include <array>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "cbricks/io/ppm.hpp"
#include "cbricks/wall.hpp"

namespace cbricks::wall {

// Plain-text grids: one line per course (row y), one character per brick.
// States use '.' resting, 'E' excited, 'R' refractory. Labels use the seed
// index modulo 10, '#' for boundary, '?' for unreached. Binary images use
// '#' for on and '.' for off.

inline char state_char(const CellState& s) {
    switch (s.phase) {
        case Phase::Resting: return '.';
        case Phase::Excited: return 'E';
        case Phase::Refractory: return 'R';
    }
    return '?';
}

namespace detail {

template <typename F>
void write_grid(std::ostream& os, const WallGraph& g, F&& glyph) {
    for (std::size_t y = 0; y < g.rows; ++y) {
        for (std::size_t x = 0; x < g.cols; ++x) os << glyph(g.id(x, y));
        os << '\n';
    }
}

inline std::vector<std::string> read_lines(std::istream& is) {
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        lines.push_back(line);
    }
    require(!lines.empty(), "grid is empty");
    for (const auto& l : lines) require(l.size() == lines[0].size(), "grid rows differ in length");
    return lines;
}

}  // namespace detail

inline void write_state_grid(std::ostream& os, const WallGraph& g, const WallState& s) {
    require(s.cells.size() == g.size(), "state length must match the wall");
    detail::write_grid(os, g, [&](CellId c) { return state_char(s.cells[c]); });
}

inline void write_label_grid(std::ostream& os, const WallGraph& g, const std::vector<int>& labels) {
    require(labels.size() == g.size(), "label count must match the wall");
    detail::write_grid(os, g, [&](CellId c) {
        const int l = labels[c];
        return l == kBoundary ? '#' : l == kUnreached ? '?' : static_cast<char>('0' + l % 10);
    });
}

inline void write_image_grid(std::ostream& os, const WallGraph& g, const BinaryImage& img) {
    require(img.size() == g.size(), "image length must match the wall");
    detail::write_grid(os, g, [&](CellId c) { return img[c] ? '#' : '.'; });
}

/// Parses a state grid; the grid's shape defines the wall size. Refractory
/// cells get `refractory_len` remaining steps.
inline WallState read_state_grid(std::istream& is, std::size_t& rows, std::size_t& cols,
                                 std::uint16_t refractory_len = 1) {
    const auto lines = detail::read_lines(is);
    rows = lines.size();
    cols = lines[0].size();
    WallState s{std::vector<CellState>(rows * cols), 0};
    for (std::size_t y = 0; y < rows; ++y)
        for (std::size_t x = 0; x < cols; ++x) {
            CellState& c = s.cells[y * cols + x];
            switch (lines[y][x]) {
                case '.': c = CellState::resting(); break;
                case 'E': c = CellState::excited(); break;
                case 'R': c = CellState::refractory(refractory_len); break;
                default: throw ValidationError(std::string("unknown state character '") + lines[y][x] + "'");
            }
        }
    return s;
}

inline BinaryImage read_image_grid(std::istream& is, std::size_t& rows, std::size_t& cols) {
    const auto lines = detail::read_lines(is);
    rows = lines.size();
    cols = lines[0].size();
    BinaryImage img(rows * cols);
    for (std::size_t y = 0; y < rows; ++y)
        for (std::size_t x = 0; x < cols; ++x) {
            const char ch = lines[y][x];
            require(ch == '#' || ch == '.', std::string("unknown image character '") + ch + "'");
            img[y * cols + x] = ch == '#';
        }
    return img;
}

// ---------------------------------------------------------------------------
// Rasterization

struct RenderStyle {
    std::size_t brick_w = 10;
    std::size_t brick_h = 5;
    io::Rgb mortar{60, 60, 60};
    io::Rgb resting{150, 95, 60};
    io::Rgb excited{220, 30, 30};
    io::Rgb refractory{40, 80, 210};
    io::Rgb on{240, 240, 230};
    io::Rgb boundary{0, 0, 0};
    io::Rgb unreached{255, 255, 255};
};

inline constexpr std::array<io::Rgb, 10> kLabelPalette{{{230, 159, 0},
                                                        {86, 180, 233},
                                                        {0, 158, 115},
                                                        {240, 228, 66},
                                                        {0, 114, 178},
                                                        {213, 94, 0},
                                                        {204, 121, 167},
                                                        {120, 120, 120},
                                                        {170, 220, 120},
                                                        {150, 60, 200}}};

/// Draws every brick as a brick_w x brick_h block with a one-pixel mortar
/// joint; even courses are shifted right by half a brick.
template <typename ColorOf>
io::Raster render_cells(const WallGraph& g, ColorOf&& color_of, const RenderStyle& st = {}) {
    io::Raster img(g.cols * st.brick_w + st.brick_w / 2, g.rows * st.brick_h, st.mortar);
    for (CellId c = 0; c < g.size(); ++c) {
        const std::size_t x = g.x_of(c), y = g.y_of(c);
        const std::size_t px = x * st.brick_w + (y % 2 == 0 ? st.brick_w / 2 : 0);
        const std::size_t py = y * st.brick_h;
        img.fill_rect(px, py, st.brick_w - 1, st.brick_h - 1, color_of(c));
    }
    return img;
}

inline io::Raster render_frame(const WallGraph& g, const WallState& s, const RenderStyle& st = {}) {
    require(s.cells.size() == g.size(), "state length must match the wall");
    return render_cells(
        g,
        [&](CellId c) {
            switch (s.cells[c].phase) {
                case Phase::Excited: return st.excited;
                case Phase::Refractory: return st.refractory;
                default: return st.resting;
            }
        },
        st);
}

inline io::Raster render_frame(const WallGraph& g, const std::vector<int>& labels, const RenderStyle& st = {}) {
    require(labels.size() == g.size(), "label count must match the wall");
    return render_cells(
        g,
        [&](CellId c) {
            const int l = labels[c];
            if (l == kBoundary) return st.boundary;
            if (l == kUnreached) return st.unreached;
            return kLabelPalette[static_cast<std::size_t>(l) % kLabelPalette.size()];
        },
        st);
}

inline io::Raster render_frame(const WallGraph& g, const BinaryImage& img, const RenderStyle& st = {}) {
    require(img.size() == g.size(), "image length must match the wall");
    return render_cells(g, [&](CellId c) { return img[c] ? st.on : st.resting; }, st);
}

}  // namespace cbricks::wall
