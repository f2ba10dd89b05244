#include "mining/dataset_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <string_view>

namespace mining {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

template <typename T>
bool parse_number(std::string_view text, T& value) {
    if (text.empty()) return false;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    return ec == std::errc() && ptr == end;
}

[[noreturn]] void fail(std::size_t line, const std::string& what) {
    throw InvalidArgument("dataset csv line " + std::to_string(line) + ": " + what);
}

}  // namespace

std::string format_real(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc()) throw InvalidArgument("cannot format real");
    return {buf, ptr};
}

void write_dataset_csv(std::ostream& out, const std::vector<DatasetRow>& rows) {
    const std::size_t d = rows.empty() ? 0 : rows.front().features.size();
    out << "id";
    for (std::size_t k = 0; k < d; ++k) out << ",f" << k;
    out << ",label\n";
    for (const auto& r : rows) {
        if (r.features.size() != d) throw InvalidArgument("rows differ in feature dimension");
        out << r.id;
        for (double f : r.features) out << ',' << format_real(f);
        out << ',';
        if (r.label) out << *r.label;
        out << '\n';
    }
}

void write_dataset_csv(const std::filesystem::path& path, const std::vector<DatasetRow>& rows) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    write_dataset_csv(out, rows);
}

std::vector<DatasetRow> read_dataset_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) fail(1, "missing header");
    const auto header = split_fields(line);
    if (header.size() < 3 || header.front() != "id" || header.back() != "label")
        fail(1, "header must be id,f0,...,label");
    const std::size_t d = header.size() - 2;
    for (std::size_t k = 0; k < d; ++k)
        if (header[k + 1] != "f" + std::to_string(k)) fail(1, "expected column f" + std::to_string(k));

    std::vector<DatasetRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') fail(line_no, "CRLF line endings are not accepted");
        if (line.empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != d + 2) fail(line_no, "expected " + std::to_string(d + 2) + " fields");
        DatasetRow row;
        if (!parse_number(fields[0], row.id)) fail(line_no, "bad id");
        row.features.resize(d);
        for (std::size_t k = 0; k < d; ++k)
            if (!parse_number(fields[k + 1], row.features[k])) fail(line_no, "bad feature f" + std::to_string(k));
        if (!fields.back().empty()) {
            Category c = 0;
            if (!parse_number(fields.back(), c) || c < kUndefined) fail(line_no, "bad label");
            row.label = c;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<DatasetRow> read_dataset_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot open dataset: " + path.string());
    return read_dataset_csv(in);
}

}  // namespace mining
