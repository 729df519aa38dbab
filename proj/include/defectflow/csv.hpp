#pragma once

#include <cstddef>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "defectflow/core.hpp"

namespace defectflow::csv {

// Row and column are 1-based; row 1 is the header.
class ParseError : public Error {
public:
    ParseError(std::size_t row, std::size_t column, const std::string& reason)
        : Error("ParseError", "parse error at row " + std::to_string(row) + ", column " +
                                  std::to_string(column) + ": " + reason),
          row(row), column(column), reason(reason) {}
    std::size_t row;
    std::size_t column;
    std::string reason;
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error("IoError", what) {}
};

using Record = std::vector<std::string>;

struct Table {
    Record header;
    std::vector<Record> rows;
};

// RFC-4180 reader: quoted fields, doubled quotes, embedded separators and
// newlines, LF or CRLF line endings. A UTF-8 BOM on the first field is dropped.
inline std::vector<Record> parse_records(std::istream& in) {
    std::vector<Record> records;
    Record current;
    std::string field;
    bool in_quotes = false;
    bool field_was_quoted = false;
    bool any = false;
    std::size_t line = 1;
    char c;

    auto end_field = [&] {
        current.push_back(std::move(field));
        field.clear();
        field_was_quoted = false;
    };
    auto end_record = [&] {
        end_field();
        records.push_back(std::move(current));
        current.clear();
        any = false;
    };

    while (in.get(c)) {
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field.push_back('"');
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                if (!field.empty() || field_was_quoted)
                    throw ParseError(line, current.size() + 1, "unexpected quote inside field");
                in_quotes = true;
                field_was_quoted = true;
                any = true;
                break;
            case ',':
                end_field();
                any = true;
                break;
            case '\r':
                if (in.peek() == '\n') break;
                [[fallthrough]];
            case '\n':
                end_record();
                ++line;
                break;
            default:
                if (field_was_quoted)
                    throw ParseError(line, current.size() + 1, "text after closing quote");
                field.push_back(c);
                any = true;
        }
    }
    if (in_quotes) throw ParseError(line, current.size() + 1, "unterminated quoted field");
    if (any || !field.empty() || !current.empty()) end_record();

    if (!records.empty() && !records.front().empty()) {
        auto& first = records.front().front();
        if (first.size() >= 3 && first.compare(0, 3, "\xEF\xBB\xBF") == 0) first.erase(0, 3);
    }
    return records;
}

// Reads a table and checks the header matches `expected` exactly.
inline Table read_table(const std::string& path, const Record& expected) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    auto records = parse_records(in);
    if (records.empty()) throw ParseError(1, 1, "missing header row in " + path);
    Table t;
    t.header = std::move(records.front());
    if (t.header != expected) {
        std::string want;
        for (const auto& h : expected) want += (want.empty() ? "" : ",") + h;
        throw ParseError(1, 1, "header mismatch in " + path + " (expected " + want + ")");
    }
    for (std::size_t i = 1; i < records.size(); ++i) {
        auto& r = records[i];
        if (r.size() == 1 && r.front().empty()) continue;  // blank line
        if (r.size() != expected.size())
            throw ParseError(i + 1, std::min(r.size(), expected.size()) + 1,
                             "expected " + std::to_string(expected.size()) + " fields, got " +
                                 std::to_string(r.size()));
        t.rows.push_back(std::move(r));
    }
    return t;
}

inline std::string escape(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

inline void write_record(std::ostream& out, const Record& record) {
    for (std::size_t i = 0; i < record.size(); ++i) {
        if (i) out << ',';
        out << escape(record[i]);
    }
    out << '\n';
}

inline void write_table(const std::string& path, const Table& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    write_record(out, table.header);
    for (const auto& r : table.rows) write_record(out, r);
    if (!out) throw IoError("write failed for " + path);
}

}  // namespace defectflow::csv
