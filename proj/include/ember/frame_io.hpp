#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "ember/errors.hpp"
#include "ember/grid.hpp"
#include "ember/particles.hpp"

namespace ember::io {

inline constexpr char kFrameMagic[4] = {'T', 'H', 'M', 'P'};
inline constexpr std::uint32_t kFrameVersion = 1;

inline constexpr std::uint32_t kFlagGridTemperature = 1u << 0;
inline constexpr std::uint32_t kFlagGridVelocity = 1u << 1;
inline constexpr std::uint32_t kFlagGridLabels = 1u << 2;

/// One output frame: little-endian binary, 32-bit float arrays with the
/// per-element components contiguous, particle states as bytes.
struct FrameRecord {
    std::uint32_t version = kFrameVersion;
    std::uint32_t d = 0;
    std::uint32_t flags = 0;

    std::vector<float> mpm_x, mpm_v, mpm_T, mpm_fuel, mpm_J;
    std::vector<std::uint8_t> mpm_state;
    std::vector<float> smoke_x, smoke_v, smoke_T;

    struct GridBlock {
        std::vector<float> origin; // d entries
        float dx = 0.0f;
        std::vector<std::uint32_t> dims; // d entries (cells)
        std::vector<float> values;       // scalar per cell or d per corner node
        std::vector<std::uint8_t> labels;
    };
    std::optional<GridBlock> grid_T;
    std::optional<GridBlock> grid_u;
    std::optional<GridBlock> grid_labels;

    std::uint32_t mpm_count() const { return static_cast<std::uint32_t>(mpm_T.size()); }
    std::uint32_t smoke_count() const { return static_cast<std::uint32_t>(smoke_T.size()); }
};

namespace detail {

template <class T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
void write_array(std::ostream& out, const std::vector<T>& v) {
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(T)));
}

template <class T>
T read_pod(std::istream& in, const char* what) {
    T v{};
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(T)))
        throw IoError(std::string("frame read: truncated file at ") + what);
    return v;
}

template <class T>
std::vector<T> read_array(std::istream& in, std::size_t count, const char* what) {
    std::vector<T> v(count);
    if (count > 0 &&
        !in.read(reinterpret_cast<char*>(v.data()),
                 static_cast<std::streamsize>(count * sizeof(T))))
        throw IoError(std::string("frame read: truncated file at ") + what);
    return v;
}

inline void write_grid_block(std::ostream& out, const FrameRecord::GridBlock& b, bool as_labels) {
    write_array(out, b.origin);
    write_pod(out, b.dx);
    write_array(out, b.dims);
    if (as_labels)
        write_array(out, b.labels);
    else
        write_array(out, b.values);
}

inline FrameRecord::GridBlock read_grid_block(std::istream& in, std::uint32_t d,
                                              std::size_t values_per_entry, bool as_labels,
                                              bool corner_lattice) {
    FrameRecord::GridBlock b;
    b.origin = read_array<float>(in, d, "grid origin");
    b.dx = read_pod<float>(in, "grid dx");
    b.dims = read_array<std::uint32_t>(in, d, "grid dims");
    std::size_t nodes = 1;
    for (std::uint32_t a = 0; a < d; ++a)
        nodes *= b.dims[a] + (corner_lattice ? 1 : 0);
    if (as_labels)
        b.labels = read_array<std::uint8_t>(in, nodes, "grid labels");
    else
        b.values = read_array<float>(in, nodes * values_per_entry, "grid values");
    return b;
}

} // namespace detail

inline void write_frame(const FrameRecord& frame, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("frame write: cannot open '" + path + "'");
    out.write(kFrameMagic, 4);
    detail::write_pod(out, frame.version);
    detail::write_pod(out, frame.d);
    const std::uint32_t mpm_count = frame.mpm_count();
    const std::uint32_t smoke_count = frame.smoke_count();
    detail::write_pod(out, mpm_count);
    detail::write_pod(out, smoke_count);
    detail::write_pod(out, frame.flags);
    detail::write_array(out, frame.mpm_x);
    detail::write_array(out, frame.mpm_v);
    detail::write_array(out, frame.mpm_T);
    detail::write_array(out, frame.mpm_fuel);
    detail::write_array(out, frame.mpm_state);
    detail::write_array(out, frame.mpm_J);
    detail::write_array(out, frame.smoke_x);
    detail::write_array(out, frame.smoke_v);
    detail::write_array(out, frame.smoke_T);
    if (frame.flags & kFlagGridTemperature)
        detail::write_grid_block(out, *frame.grid_T, false);
    if (frame.flags & kFlagGridVelocity)
        detail::write_grid_block(out, *frame.grid_u, false);
    if (frame.flags & kFlagGridLabels)
        detail::write_grid_block(out, *frame.grid_labels, true);
    if (!out) throw IoError("frame write: I/O failure writing '" + path + "'");
}

inline FrameRecord read_frame(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("frame read: cannot open '" + path + "'");
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kFrameMagic, 4) != 0)
        throw IoError("frame read: bad magic in '" + path + "'");
    FrameRecord frame;
    frame.version = detail::read_pod<std::uint32_t>(in, "version");
    if (frame.version > kFrameVersion)
        throw IoError("frame read: unsupported version " + std::to_string(frame.version));
    frame.d = detail::read_pod<std::uint32_t>(in, "dimension");
    if (frame.d != 2 && frame.d != 3) throw IoError("frame read: bad dimension");
    const auto mpm_count = detail::read_pod<std::uint32_t>(in, "mpm count");
    const auto smoke_count = detail::read_pod<std::uint32_t>(in, "smoke count");
    frame.flags = detail::read_pod<std::uint32_t>(in, "flags");
    frame.mpm_x = detail::read_array<float>(in, std::size_t{mpm_count} * frame.d, "mpm x");
    frame.mpm_v = detail::read_array<float>(in, std::size_t{mpm_count} * frame.d, "mpm v");
    frame.mpm_T = detail::read_array<float>(in, mpm_count, "mpm T");
    frame.mpm_fuel = detail::read_array<float>(in, mpm_count, "mpm fuel");
    frame.mpm_state = detail::read_array<std::uint8_t>(in, mpm_count, "mpm state");
    frame.mpm_J = detail::read_array<float>(in, mpm_count, "mpm J");
    frame.smoke_x = detail::read_array<float>(in, std::size_t{smoke_count} * frame.d, "smoke x");
    frame.smoke_v = detail::read_array<float>(in, std::size_t{smoke_count} * frame.d, "smoke v");
    frame.smoke_T = detail::read_array<float>(in, smoke_count, "smoke T");
    if (frame.flags & kFlagGridTemperature)
        frame.grid_T = detail::read_grid_block(in, frame.d, 1, false, false);
    if (frame.flags & kFlagGridVelocity)
        frame.grid_u = detail::read_grid_block(in, frame.d, frame.d, false, true);
    if (frame.flags & kFlagGridLabels)
        frame.grid_labels = detail::read_grid_block(in, frame.d, 1, true, false);
    return frame;
}

/// Debug companion to the binary format: one row per particle.
inline void write_frame_csv(const FrameRecord& frame, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("csv write: cannot open '" + path + "'");
    const std::uint32_t d = frame.d;
    out << "kind,id";
    for (std::uint32_t a = 0; a < d; ++a) out << ",x" << a;
    for (std::uint32_t a = 0; a < d; ++a) out << ",v" << a;
    out << ",T,fuel,state,J\n";
    for (std::uint32_t i = 0; i < frame.mpm_count(); ++i) {
        out << "mpm," << i;
        for (std::uint32_t a = 0; a < d; ++a) out << ',' << frame.mpm_x[i * d + a];
        for (std::uint32_t a = 0; a < d; ++a) out << ',' << frame.mpm_v[i * d + a];
        out << ',' << frame.mpm_T[i] << ',' << frame.mpm_fuel[i] << ','
            << static_cast<int>(frame.mpm_state[i]) << ',' << frame.mpm_J[i] << '\n';
    }
    for (std::uint32_t i = 0; i < frame.smoke_count(); ++i) {
        out << "smoke," << i;
        for (std::uint32_t a = 0; a < d; ++a) out << ',' << frame.smoke_x[i * d + a];
        for (std::uint32_t a = 0; a < d; ++a) out << ',' << frame.smoke_v[i * d + a];
        out << ',' << frame.smoke_T[i] << ",,,\n";
    }
    if (!out) throw IoError("csv write: I/O failure writing '" + path + "'");
}

} // namespace ember::io
