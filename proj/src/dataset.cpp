#include "cfsat/dataset.hpp"

#include "cfsat/errors.hpp"
#include "cfsat/model.hpp"

#include <boost/tokenizer.hpp>

#include <fstream>
#include <map>
#include <optional>
#include <sstream>

namespace cfsat {

namespace {

using Tokenizer = boost::tokenizer<boost::escaped_list_separator<char>>;

std::string trim(std::string_view s)
{
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_line(const std::string& line, std::size_t line_no)
{
    std::vector<std::string> cells;
    try {
        Tokenizer tok(line, boost::escaped_list_separator<char>('\\', ',', '"'));
        for (const auto& cell : tok)
            cells.push_back(trim(cell));
    } catch (const boost::escaped_list_error& e) {
        throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
    return cells;
}

bool missing(const std::string& cell)
{
    return cell.empty() || cell == "?" || cell == "NA" || cell == "nan" || cell == "NaN";
}

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

std::vector<std::pair<Rational, Rational>> Dataset::observed_ranges() const
{
    std::vector<std::pair<Rational, Rational>> out;
    for (std::size_t j = 0; j < schema.size(); ++j) {
        if (rows.empty()) {
            out.emplace_back(schema.feature(j).lo, schema.feature(j).hi);
            continue;
        }
        Rational lo = rows.front()[j], hi = rows.front()[j];
        for (const auto& r : rows) {
            if (r[j] < lo)
                lo = r[j];
            if (r[j] > hi)
                hi = r[j];
        }
        out.emplace_back(lo, hi);
    }
    return out;
}

Dataset parse_dataset(std::string_view csv, const FeatureSchema& schema)
{
    std::istringstream in{std::string(csv)};
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (header.empty() && std::getline(in, line)) {
        ++line_no;
        if (!trim(line).empty())
            header = split_line(line, line_no);
    }
    if (header.empty())
        throw ValidationError("dataset has no header row");
    if (!header.empty() && header[0].starts_with("\xEF\xBB\xBF"))
        header[0] = header[0].substr(3);

    std::map<std::string, std::size_t, std::less<>> column;
    for (std::size_t c = 0; c < header.size(); ++c)
        if (!column.emplace(header[c], c).second)
            throw ValidationError("duplicate column '" + header[c] + "'");
    std::vector<std::size_t> feature_col(schema.size());
    for (std::size_t j = 0; j < schema.size(); ++j) {
        auto it = column.find(schema.feature(j).name);
        if (it == column.end())
            throw ValidationError("header lacks feature column '" + schema.feature(j).name + "'");
        feature_col[j] = it->second;
    }
    auto label_it = column.find(schema.label());
    if (label_it == column.end())
        throw ValidationError("header lacks label column '" + schema.label() + "'");
    std::size_t label_col = label_it->second;
    if (header.size() != schema.size() + 1) {
        for (const auto& name : header)
            if (name != schema.label() && !schema.find_feature(name))
                throw ValidationError("column '" + name + "' is not a schema feature");
    }

    Dataset data;
    data.schema = schema;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty())
            continue;
        auto cells = split_line(line, line_no);
        if (cells.size() != header.size())
            throw ParseError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                             " cells, found " + std::to_string(cells.size()));
        bool incomplete = false;
        for (const auto& c : cells)
            incomplete = incomplete || missing(c);
        if (incomplete) {
            ++data.dropped;
            continue;
        }
        RawInstance raw(schema.size());
        for (std::size_t j = 0; j < schema.size(); ++j) {
            try {
                raw[j] = schema.parse_value(j, cells[feature_col[j]]);
            } catch (const Error& e) {
                throw ParseError("line " + std::to_string(line_no) + ", column '" + schema.feature(j).name +
                                 "': " + e.what());
            }
        }
        try {
            encode_instance(schema, raw);
        } catch (const Error& e) {
            throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
        }
        const std::string& label = cells[label_col];
        int y;
        if (label == "0" || label == "0.0" || label == "false")
            y = 0;
        else if (label == "1" || label == "1.0" || label == "true")
            y = 1;
        else
            throw ParseError("line " + std::to_string(line_no) + ", column '" + schema.label() + "': label '" +
                             label + "' is not 0 or 1");
        data.rows.push_back(std::move(raw));
        data.labels.push_back(y);
    }
    if (data.rows.empty())
        throw ValidationError("dataset is empty after dropping " + std::to_string(data.dropped) +
                              " rows with missing values");
    return data;
}

Dataset load_dataset(const std::string& csv_path, const FeatureSchema& schema)
{
    return parse_dataset(read_file(csv_path), schema);
}

Dataset load_dataset(const std::string& csv_path, const std::string& schema_path)
{
    return load_dataset(csv_path, parse_schema(read_file(schema_path)));
}

std::string format_dataset(const Dataset& data)
{
    std::ostringstream os;
    for (const auto& f : data.schema.features())
        os << f.name << ',';
    os << data.schema.label() << '\n';
    for (std::size_t i = 0; i < data.rows.size(); ++i) {
        for (std::size_t j = 0; j < data.schema.size(); ++j) {
            std::string v = data.schema.format_value(j, data.rows[i][j]);
            if (v.find_first_of(",\"\\") != std::string::npos) {
                std::string q = "\"";
                for (char c : v) {
                    if (c == '"' || c == '\\')
                        q += '\\';
                    q += c;
                }
                v = q + '"';
            }
            os << v << ',';
        }
        os << data.labels[i] << '\n';
    }
    return os.str();
}

} // namespace cfsat
