#pragma once

// Bundle CSV ingestion/emission, content digests and deterministic JSON text.
//
// Bundle CSV: UTF-8, header `g,ll_1,...,ll_N`, one row per draw, '.' as the
// decimal point, scientific notation allowed, no grouping separators.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "amip/core.hpp"

namespace amip {

/// FNV-1a 64-bit over the raw bytes, as 16 lowercase hex digits.
inline std::string content_digest(std::string_view bytes) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open '" + path + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

namespace detail {
inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

inline std::string_view strip_cr(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
}

inline double parse_number(std::string_view field, std::size_t row, std::size_t col) {
    auto fail = [&](const std::string& what) {
        std::ostringstream os;
        os << what << " at row " << row << ", column " << col;
        throw InvalidInput(os.str());
    };
    if (field.empty()) fail("empty field");
    const char* first = field.data();
    if (*first == '+') ++first;
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(first, field.data() + field.size(), value);
    if (ec == std::errc::result_out_of_range) fail("non-finite value");
    if (ec != std::errc() || ptr != field.data() + field.size()) fail("unparseable number '" + std::string(field) + "'");
    if (!std::isfinite(value)) fail("non-finite value");
    return value;
}
} // namespace detail

/// Parses bundle CSV text. Rows and columns in error messages are 1-based;
/// row 1 is the header.
inline DrawBundle parse_bundle_csv(std::string_view text, SamplingKind kind = SamplingKind::unknown) {
    if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        const std::size_t nl = text.find('\n', start);
        const auto line = detail::strip_cr(text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start));
        lines.push_back(line);
        if (nl == std::string_view::npos) break;
        start = nl + 1;
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    if (lines.empty()) throw InvalidInput("missing header: expected 'g,ll_1,...,ll_N'");

    const auto header = detail::split_fields(lines.front());
    if (header.size() < 2 || header.front() != "g") throw InvalidInput("missing header: expected 'g,ll_1,...,ll_N'");
    for (std::size_t c = 1; c < header.size(); ++c) {
        if (header[c] != "ll_" + std::to_string(c))
            throw InvalidInput("header column " + std::to_string(c + 1) + " must be 'll_" + std::to_string(c) +
                               "' (columns ll_1..ll_N in order)");
    }
    const std::size_t N = header.size() - 1;
    if (lines.size() < 2) throw InvalidInput("bundle has no data rows");

    std::vector<double> g;
    std::vector<double> ll;
    g.reserve(lines.size() - 1);
    ll.reserve((lines.size() - 1) * N);
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const auto fields = detail::split_fields(lines[r]);
        if (fields.size() != N + 1)
            throw InvalidInput("row " + std::to_string(r + 1) + " has " + std::to_string(fields.size()) +
                               " fields, expected " + std::to_string(N + 1));
        g.push_back(detail::parse_number(fields[0], r + 1, 1));
        for (std::size_t c = 1; c <= N; ++c) ll.push_back(detail::parse_number(fields[c], r + 1, c + 1));
    }
    if (g.size() < 2) throw InvalidInput("bundle needs at least two draws (S >= 2)");
    return DrawBundle(std::move(g), std::move(ll), N, kind);
}

inline DrawBundle ingest_bundle(const std::string& path, SamplingKind kind = SamplingKind::unknown) {
    return parse_bundle_csv(read_file(path), kind);
}

/// Shortest-safe fixed formatting used everywhere in emitted text: 17
/// significant digits, so values round-trip exactly.
inline std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string bundle_to_csv(const DrawBundle& bundle) {
    std::string out = "g";
    for (std::size_t n = 1; n <= bundle.observations(); ++n) out += ",ll_" + std::to_string(n);
    out += '\n';
    for (std::size_t s = 0; s < bundle.draws(); ++s) {
        out += format_real(bundle.g_values()[s]);
        for (double v : bundle.row(s)) {
            out += ',';
            out += format_real(v);
        }
        out += '\n';
    }
    return out;
}

using Json = nlohmann::ordered_json;

namespace detail {
inline void escape_into(std::string& out, const std::string& s) {
    out += Json(s).dump();
}

inline void dump_into(std::string& out, const Json& j, int indent, int depth) {
    const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
    const std::string close_pad(static_cast<std::size_t>(indent * depth), ' ');
    switch (j.type()) {
    case Json::value_t::object: {
        if (j.empty()) {
            out += "{}";
            return;
        }
        out += "{\n";
        bool first = true;
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (!first) out += ",\n";
            first = false;
            out += pad;
            escape_into(out, it.key());
            out += ": ";
            dump_into(out, it.value(), indent, depth + 1);
        }
        out += "\n" + close_pad + "}";
        return;
    }
    case Json::value_t::array: {
        if (j.empty()) {
            out += "[]";
            return;
        }
        bool scalars = true;
        for (const auto& e : j) scalars = scalars && e.is_primitive();
        if (scalars) {
            out += "[";
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i) out += ", ";
                dump_into(out, j[i], indent, depth + 1);
            }
            out += "]";
            return;
        }
        out += "[\n";
        for (std::size_t i = 0; i < j.size(); ++i) {
            if (i) out += ",\n";
            out += pad;
            dump_into(out, j[i], indent, depth + 1);
        }
        out += "\n" + close_pad + "]";
        return;
    }
    case Json::value_t::number_float: out += format_real(j.get<double>()); return;
    default: out += j.dump(); return;
    }
}
} // namespace detail

/// Deterministic JSON text: insertion key order, floats at 17 significant
/// digits, trailing newline.
inline std::string dump_json(const Json& j, int indent = 2) {
    std::string out;
    detail::dump_into(out, j, indent, 0);
    out += '\n';
    return out;
}

} // namespace amip
