#include "itolevy/report_io.hpp"

#include "itolevy/error.hpp"
#include "itolevy/format.hpp"

#include <json.hpp>

#include <cmath>
#include <limits>

namespace itolevy::cli {

using json = nlohmann::ordered_json;

namespace {

json number(double x)
{
    return std::isfinite(x) ? json(x) : json(nullptr);
}

double read_number(const json& v)
{
    return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
}

std::string csv_number(double x)
{
    return std::isfinite(x) ? format_double(x) : std::string();
}

/// Names never contain commas or quotes, but quote defensively.
std::string csv_text(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        out += c == '"' ? std::string("\"\"") : std::string(1, c);
    }
    return out + "\"";
}

} // namespace

std::string reports_to_json(const std::vector<verify::Report>& reports)
{
    json out = json::array();
    for (const auto& r : reports) {
        json o = json::object();
        o["name"] = r.name;
        o["lhs"] = number(r.lhs);
        o["rhs"] = number(r.rhs);
        o["se"] = number(r.se);
        o["margin"] = number(r.margin);
        o["pass"] = r.pass;
        o["nPaths"] = r.nPaths;
        o["seed"] = r.seed;
        o["wallTime"] = number(r.wallTime);
        if (r.truncationBound) {
            o["truncationBound"] = number(*r.truncationBound);
        }
        out.push_back(o);
    }
    return out.dump(2) + "\n";
}

std::string reports_to_csv(const std::vector<verify::Report>& reports)
{
    std::string out = "name,lhs,rhs,se,margin,pass,nPaths,seed,wallTime,truncationBound\n";
    for (const auto& r : reports) {
        out += csv_text(r.name) + ',' + csv_number(r.lhs) + ',' + csv_number(r.rhs) + ',' + csv_number(r.se) + ','
            + csv_number(r.margin) + ',' + (r.pass ? "true" : "false") + ',' + std::to_string(r.nPaths) + ','
            + std::to_string(r.seed) + ',' + csv_number(r.wallTime) + ','
            + (r.truncationBound ? csv_number(*r.truncationBound) : std::string()) + '\n';
    }
    return out;
}

std::vector<verify::Report> reports_from_json(const std::string& text)
{
    std::vector<verify::Report> out;
    try {
        for (const auto& o : json::parse(text)) {
            verify::Report r;
            r.name = o.at("name").get<std::string>();
            r.lhs = read_number(o.at("lhs"));
            r.rhs = read_number(o.at("rhs"));
            r.se = read_number(o.at("se"));
            r.margin = read_number(o.at("margin"));
            r.pass = o.at("pass").get<bool>();
            r.nPaths = o.at("nPaths").get<std::uint64_t>();
            r.seed = o.at("seed").get<std::uint64_t>();
            r.wallTime = read_number(o.at("wallTime"));
            if (o.contains("truncationBound")) {
                r.truncationBound = read_number(o.at("truncationBound"));
            }
            out.push_back(r);
        }
    } catch (const json::exception& e) {
        fail(ErrorCode::ConfigInvalid, std::string("malformed report file: ") + e.what());
    }
    return out;
}

} // namespace itolevy::cli
