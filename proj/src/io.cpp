#include "lorehm/io.hpp"

#include <fstream>
#include <sstream>

#include "lorehm/error.hpp"

namespace lorehm::io {

void for_each_json_line(std::istream& in, std::string_view source,
                        const std::function<void(std::size_t, const Json&)>& visit) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        Json value;
        try {
            value = Json::parse(line);
        } catch (const Json::parse_error& e) {
            throw Error(std::string(source) + ": line " + std::to_string(line_no) +
                        ": malformed JSON (" + e.what() + ")");
        }
        visit(line_no, value);
    }
}

void for_each_json_line(const std::filesystem::path& path,
                        const std::function<void(std::size_t, const Json&)>& visit) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open " + path.string());
    }
    for_each_json_line(in, path.string(), visit);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error("cannot write " + tmp.string());
        }
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) {
            throw Error("short write to " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

void append_line(const std::filesystem::path& path, std::string_view line) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::app);
    if (!out) {
        throw Error("cannot append to " + path.string());
    }
    out << line << '\n';
}

std::string dump_line(const Json& value) {
    return value.dump(-1, ' ', false, Json::error_handler_t::replace);
}

} // namespace lorehm::io
