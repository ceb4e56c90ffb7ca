#include "itolevy/config.hpp"

#include "itolevy/error.hpp"

#include <boost/math/special_functions/zeta.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace itolevy::cli {

using json = nlohmann::ordered_json;

namespace {

[[noreturn]] void invalid(const std::string& key, const std::string& what)
{
    fail(ErrorCode::ConfigInvalid, key + ": " + what);
}

/// Strict view of one JSON object: every key read is recorded, and finish()
/// rejects the rest.
class Section {
public:
    Section(const json& node, std::string path) : node_(node), path_(std::move(path))
    {
        if (!node_.is_object()) {
            invalid(path_, "expected an object");
        }
    }

    std::string key(const std::string& name) const { return path_.empty() ? name : path_ + "." + name; }

    bool has(const std::string& name)
    {
        seen_.insert(name);
        return node_.contains(name);
    }

    const json& at(const std::string& name)
    {
        if (!has(name)) {
            invalid(key(name), "missing");
        }
        return node_.at(name);
    }

    template <class T>
    T get(const std::string& name)
    {
        return convert<T>(at(name), key(name));
    }

    template <class T>
    T get(const std::string& name, T fallback)
    {
        return has(name) ? convert<T>(node_.at(name), key(name)) : fallback;
    }

    template <class T>
    std::optional<T> maybe(const std::string& name)
    {
        if (!has(name)) {
            return std::nullopt;
        }
        return convert<T>(node_.at(name), key(name));
    }

    void finish() const
    {
        for (const auto& item : node_.items()) {
            if (!seen_.count(item.key())) {
                invalid(key(item.key()), "unknown key");
            }
        }
    }

    template <class T>
    static T convert(const json& v, const std::string& key)
    {
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) {
                invalid(key, "expected a boolean");
            }
            return v.get<bool>();
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) {
                invalid(key, "expected a string");
            }
            return v.get<std::string>();
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number()) {
                invalid(key, "expected a number");
            }
            const double d = v.get<double>();
            if (!std::isfinite(d)) {
                invalid(key, "must be finite");
            }
            return d;
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) {
                invalid(key, "expected an integer");
            }
            if constexpr (std::is_unsigned_v<T>) {
                if (v.is_number_unsigned()) {
                    return static_cast<T>(v.get<std::uint64_t>());
                }
                if (v.get<std::int64_t>() < 0) {
                    invalid(key, "must be non-negative");
                }
            }
            return static_cast<T>(v.get<std::int64_t>());
        } else {
            static_assert(sizeof(T) == 0, "unsupported type");
        }
    }

private:
    const json& node_;
    std::string path_;
    std::set<std::string> seen_;
};

std::vector<double> number_list(const json& v, const std::string& key)
{
    if (!v.is_array()) {
        invalid(key, "expected an array of numbers");
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out.push_back(Section::convert<double>(v[i], key + "[" + std::to_string(i) + "]"));
    }
    return out;
}

std::vector<std::vector<double>> number_table(const json& v, const std::string& key)
{
    if (!v.is_array()) {
        invalid(key, "expected an array of arrays");
    }
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out.push_back(number_list(v[i], key + "[" + std::to_string(i) + "]"));
    }
    return out;
}

SpaceSection parse_space(const json& v)
{
    Section s(v, "space");
    SpaceSection out;
    out.dH = s.get<int>("dH");
    out.J = s.get<int>("J");
    out.T = s.get<double>("T");
    out.nScheduled = s.get<int>("nScheduled");
    s.finish();
    if (out.dH < 1) {
        invalid("space.dH", "must be at least 1");
    }
    if (out.J < 1) {
        invalid("space.J", "must be at least 1");
    }
    if (!(out.T > 0.0)) {
        invalid("space.T", "must be positive");
    }
    if (out.nScheduled < 1) {
        invalid("space.nScheduled", "must be at least 1");
    }
    return out;
}

CovarianceSection parse_covariance(const json& v)
{
    Section s(v, "covariance");
    CovarianceSection out;
    if (s.has("eigenvalues")) {
        out.eigenvalues = number_list(s.at("eigenvalues"), "covariance.eigenvalues");
    }
    if (s.has("law")) {
        Section law(s.at("law"), "covariance.law");
        LawSection l;
        l.kind = law.get<std::string>("kind");
        l.c = law.get<double>("c");
        if (l.kind == "power") {
            l.p = law.get<double>("p");
            if (!(l.p > 1.0)) {
                invalid("covariance.law.p", "must exceed 1");
            }
        } else if (l.kind == "geometric") {
            l.r = law.get<double>("r");
            if (!(l.r > 0.0 && l.r < 1.0)) {
                invalid("covariance.law.r", "must lie in (0, 1)");
            }
        } else {
            invalid("covariance.law.kind", "must be power or geometric");
        }
        if (!(l.c > 0.0)) {
            invalid("covariance.law.c", "must be positive");
        }
        l.J = law.maybe<int>("J");
        law.finish();
        out.law = l;
    }
    if (out.eigenvalues.has_value() == out.law.has_value()) {
        invalid("covariance", "exactly one of eigenvalues or law is required");
    }
    if (s.has("basis")) {
        const json& b = s.at("basis");
        if (b.is_string()) {
            if (b.get<std::string>() != "identity") {
                invalid("covariance.basis", "must be \"identity\" or {\"seed\": n}");
            }
        } else {
            Section basis(b, "covariance.basis");
            out.basisSeed = basis.get<std::uint64_t>("seed");
            basis.finish();
        }
    }
    out.tailMass = s.maybe<double>("tailMass");
    s.finish();
    return out;
}

DriverEntry parse_driver(const json& v, const std::string& key)
{
    Section s(v, key);
    DriverEntry d;
    d.preset = s.maybe<std::string>("preset");
    d.sigma = s.maybe<double>("sigma");
    d.a = s.maybe<double>("a");
    if (s.has("jumps")) {
        const json& jumps = s.at("jumps");
        if (!jumps.is_array()) {
            invalid(key + ".jumps", "expected an array");
        }
        for (std::size_t m = 0; m < jumps.size(); ++m) {
            Section jump(jumps[m], key + ".jumps[" + std::to_string(m) + "]");
            d.jumps.push_back({jump.get<double>("size"), jump.get<double>("intensity")});
            jump.finish();
        }
    }
    s.finish();
    if (d.preset) {
        const std::string& p = *d.preset;
        if (p != "brownian" && p != "poisson" && p != "mixed") {
            invalid(key + ".preset", "must be brownian, poisson or mixed");
        }
        if (!d.jumps.empty()) {
            invalid(key + ".jumps", "not allowed with a preset");
        }
        if ((p == "poisson" || p == "mixed") && !d.a) {
            invalid(key + ".a", "missing");
        }
        if (p == "mixed" && !d.sigma) {
            invalid(key + ".sigma", "missing");
        }
        if (p == "brownian" && (d.a || d.sigma)) {
            invalid(key, "brownian takes no parameters");
        }
        if (p == "poisson" && d.sigma) {
            invalid(key + ".sigma", "not allowed for poisson");
        }
    } else {
        if (!d.sigma) {
            invalid(key + ".sigma", "missing");
        }
        if (d.a) {
            invalid(key + ".a", "only allowed with a preset");
        }
    }
    return d;
}

DriversSection parse_drivers(const json& v)
{
    DriversSection out;
    if (v.is_array()) {
        for (std::size_t j = 0; j < v.size(); ++j) {
            out.entries.push_back(parse_driver(v[j], "drivers[" + std::to_string(j) + "]"));
        }
        return out;
    }
    if (v.is_object() && v.contains("explicit")) {
        Section s(v, "drivers");
        out.explicitIncrements = number_table(s.at("explicit"), "drivers.explicit");
        s.finish();
        return out;
    }
    out.entries.push_back(parse_driver(v, "drivers"));
    return out;
}

IntegrandSection parse_integrand(const json& v)
{
    Section s(v, "integrand");
    IntegrandSection out;
    out.family = s.get<std::string>("family", out.family);
    out.evaluator = s.get<std::string>("evaluator", out.evaluator);
    out.seed = s.get<std::uint64_t>("seed", out.seed);
    out.scale = s.get<double>("scale", out.scale);
    if (s.has("breakpoints")) {
        out.breakpoints = number_list(s.at("breakpoints"), "integrand.breakpoints");
    }
    if (s.has("values")) {
        const json& values = s.at("values");
        if (!values.is_array()) {
            invalid("integrand.values", "expected an array of matrices");
        }
        for (std::size_t i = 0; i < values.size(); ++i) {
            out.values.push_back(number_table(values[i], "integrand.values[" + std::to_string(i) + "]"));
        }
    }
    s.finish();
    if (out.family != "simple" && out.family != "grid") {
        invalid("integrand.family", "must be simple or grid");
    }
    if (out.evaluator != "zero" && out.evaluator != "constant" && out.evaluator != "feedback"
        && out.evaluator != "explicit") {
        invalid("integrand.evaluator", "must be zero, constant, feedback or explicit");
    }
    if (out.family == "simple" && out.breakpoints.size() < 2) {
        invalid("integrand.breakpoints", "simple integrands need at least two breakpoints");
    }
    if (out.evaluator == "explicit" && out.values.empty()) {
        invalid("integrand.values", "explicit integrands need values");
    }
    return out;
}

McSection parse_mc(const json& v)
{
    Section s(v, "mc");
    McSection out;
    out.nPaths = s.get<std::uint64_t>("nPaths", out.nPaths);
    out.seed = s.get<std::uint64_t>("seed", out.seed);
    out.threads = s.get<unsigned>("threads", out.threads);
    s.finish();
    if (out.nPaths < 1) {
        invalid("mc.nPaths", "must be at least 1");
    }
    return out;
}

CheckEntry parse_check_entry(const json& v, const std::string& key)
{
    CheckEntry c;
    if (v.is_string()) {
        c.name = v.get<std::string>();
    } else {
        Section s(v, key);
        c.name = s.get<std::string>("name");
        c.variant = s.maybe<std::string>("variant");
        c.nPaths = s.maybe<std::uint64_t>("nPaths");
        c.seed = s.maybe<std::uint64_t>("seed");
        c.relTol = s.maybe<double>("relTol");
        c.sigmas = s.maybe<double>("sigmas");
        c.fault = s.maybe<std::string>("fault");
        c.jsub = s.maybe<int>("jsub");
        c.rotations = s.maybe<int>("rotations");
        if (s.has("pairs")) {
            const json& pairs = s.at("pairs");
            if (!pairs.is_array()) {
                invalid(key + ".pairs", "expected an array of [j, k] pairs");
            }
            std::vector<std::pair<int, int>> out;
            for (std::size_t i = 0; i < pairs.size(); ++i) {
                const std::string pk = key + ".pairs[" + std::to_string(i) + "]";
                if (!pairs[i].is_array() || pairs[i].size() != 2) {
                    invalid(pk, "expected [j, k]");
                }
                out.emplace_back(Section::convert<int>(pairs[i][0], pk), Section::convert<int>(pairs[i][1], pk));
            }
            c.pairs = out;
        }
        s.finish();
    }
    try {
        verify::parse_check(c.name);
        if (c.fault) {
            verify::parse_fault(*c.fault);
        }
    } catch (const Error& e) {
        if (e.code() == ErrorCode::UnknownCheck) {
            throw;
        }
        invalid(key + ".fault", e.what());
    }
    return c;
}

OutputSection parse_output(const json& v)
{
    Section s(v, "output");
    OutputSection out;
    out.path = s.get<std::string>("path", out.path);
    out.format = s.get<std::string>("format", out.format);
    out.timing = s.get<bool>("timing", out.timing);
    out.pathIndex = s.get<std::uint64_t>("pathIndex", out.pathIndex);
    s.finish();
    if (out.format != "json" && out.format != "csv") {
        invalid("output.format", "must be json or csv");
    }
    return out;
}

json driver_json(const DriverEntry& d)
{
    json out = json::object();
    if (d.preset) {
        out["preset"] = *d.preset;
    }
    if (d.sigma) {
        out["sigma"] = *d.sigma;
    }
    if (d.a) {
        out["a"] = *d.a;
    }
    if (!d.jumps.empty()) {
        json jumps = json::array();
        for (const auto& j : d.jumps) {
            jumps.push_back({{"size", j.size}, {"intensity", j.intensity}});
        }
        out["jumps"] = jumps;
    }
    return out;
}

json check_json(const CheckEntry& c)
{
    json out = json::object();
    out["name"] = c.name;
    if (c.variant) {
        out["variant"] = *c.variant;
    }
    if (c.nPaths) {
        out["nPaths"] = *c.nPaths;
    }
    if (c.seed) {
        out["seed"] = *c.seed;
    }
    if (c.relTol) {
        out["relTol"] = *c.relTol;
    }
    if (c.sigmas) {
        out["sigmas"] = *c.sigmas;
    }
    if (c.fault) {
        out["fault"] = *c.fault;
    }
    if (c.jsub) {
        out["jsub"] = *c.jsub;
    }
    if (c.pairs) {
        json pairs = json::array();
        for (const auto& [j, k] : *c.pairs) {
            pairs.push_back({j, k});
        }
        out["pairs"] = pairs;
    }
    if (c.rotations) {
        out["rotations"] = *c.rotations;
    }
    return out;
}

process::StandardLevySpec driver_spec(const DriverEntry& d)
{
    if (!d.preset) {
        process::StandardLevySpec spec;
        spec.sigma = *d.sigma;
        for (const auto& j : d.jumps) {
            spec.jumps.push_back({j.size, j.intensity});
        }
        return spec;
    }
    if (*d.preset == "brownian") {
        return process::from_preset(process::Preset::brownian());
    }
    if (*d.preset == "poisson") {
        return process::from_preset(process::Preset::poisson(*d.a));
    }
    return process::from_preset(process::Preset::mixed(*d.sigma, *d.a));
}

} // namespace

ExperimentConfig parse_config(const std::string& text)
{
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::ConfigInvalid, std::string("malformed JSON: ") + e.what());
    }
    Section s(root, "");
    ExperimentConfig c;
    c.space = parse_space(s.at("space"));
    c.covariance = parse_covariance(s.at("covariance"));
    c.drivers = parse_drivers(s.at("drivers"));
    if (s.has("integrand")) {
        c.integrand = parse_integrand(s.at("integrand"));
    }
    if (s.has("mc")) {
        c.mc = parse_mc(s.at("mc"));
    }
    if (s.has("checks")) {
        const json& checks = s.at("checks");
        if (!checks.is_array()) {
            invalid("checks", "expected an array");
        }
        for (std::size_t i = 0; i < checks.size(); ++i) {
            c.checks.push_back(parse_check_entry(checks[i], "checks[" + std::to_string(i) + "]"));
        }
    }
    if (s.has("output")) {
        c.output = parse_output(s.at("output"));
    }
    s.finish();
    return c;
}

ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::ConfigNotFound, "cannot read config '" + path + "'");
    }
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

std::string serialize_config(const ExperimentConfig& c)
{
    json root = json::object();
    root["space"] = {{"dH", c.space.dH}, {"J", c.space.J}, {"T", c.space.T}, {"nScheduled", c.space.nScheduled}};

    json cov = json::object();
    if (c.covariance.eigenvalues) {
        cov["eigenvalues"] = *c.covariance.eigenvalues;
    }
    if (c.covariance.law) {
        const auto& l = *c.covariance.law;
        json law = {{"kind", l.kind}, {"c", l.c}};
        if (l.kind == "power") {
            law["p"] = l.p;
        } else {
            law["r"] = l.r;
        }
        if (l.J) {
            law["J"] = *l.J;
        }
        cov["law"] = law;
    }
    if (c.covariance.basisSeed) {
        cov["basis"] = {{"seed", *c.covariance.basisSeed}};
    } else {
        cov["basis"] = "identity";
    }
    if (c.covariance.tailMass) {
        cov["tailMass"] = *c.covariance.tailMass;
    }
    root["covariance"] = cov;

    if (c.drivers.explicitIncrements) {
        root["drivers"] = {{"explicit", *c.drivers.explicitIncrements}};
    } else {
        json drivers = json::array();
        for (const auto& d : c.drivers.entries) {
            drivers.push_back(driver_json(d));
        }
        root["drivers"] = drivers;
    }

    if (c.integrand) {
        const auto& in = *c.integrand;
        json integrand = {{"family", in.family}, {"evaluator", in.evaluator}, {"seed", in.seed}, {"scale", in.scale}};
        if (!in.breakpoints.empty()) {
            integrand["breakpoints"] = in.breakpoints;
        }
        if (!in.values.empty()) {
            integrand["values"] = in.values;
        }
        root["integrand"] = integrand;
    }
    root["mc"] = {{"nPaths", c.mc.nPaths}, {"seed", c.mc.seed}, {"threads", c.mc.threads}};
    if (!c.checks.empty()) {
        json checks = json::array();
        for (const auto& entry : c.checks) {
            checks.push_back(check_json(entry));
        }
        root["checks"] = checks;
    }
    root["output"] = {{"path", c.output.path},
                      {"format", c.output.format},
                      {"timing", c.output.timing},
                      {"pathIndex", c.output.pathIndex}};
    return root.dump(2) + "\n";
}

space::Vector resolve_eigenvalues(const ExperimentConfig& config)
{
    const int J = config.space.J;
    if (config.covariance.eigenvalues) {
        const auto& list = *config.covariance.eigenvalues;
        if (static_cast<int>(list.size()) != J) {
            invalid("covariance.eigenvalues", "expected J = " + std::to_string(J) + " entries");
        }
        return Eigen::Map<const space::Vector>(list.data(), J);
    }
    const auto& law = *config.covariance.law;
    if (law.J && *law.J != J) {
        invalid("covariance.law.J", "must equal space.J");
    }
    space::Vector out(J);
    for (int j = 1; j <= J; ++j) {
        out(j - 1) = law.kind == "power" ? law.c * std::pow(static_cast<double>(j), -law.p)
                                         : law.c * std::pow(law.r, static_cast<double>(j));
    }
    return out;
}

double resolve_tail_mass(const ExperimentConfig& config)
{
    if (config.covariance.tailMass) {
        return *config.covariance.tailMass;
    }
    if (!config.covariance.law) {
        return 0.0;
    }
    const auto& law = *config.covariance.law;
    const int J = config.space.J;
    if (law.kind == "geometric") {
        return law.c * std::pow(law.r, static_cast<double>(J + 1)) / (1.0 - law.r);
    }
    double head = 0.0;
    for (int j = 1; j <= J; ++j) {
        head += std::pow(static_cast<double>(j), -law.p);
    }
    return std::max(0.0, law.c * (boost::math::zeta(law.p) - head));
}

verify::Scenario build_scenario(const ExperimentConfig& config)
{
    verify::Scenario s;
    const int J = config.space.J;
    s.space = {config.space.dH, J, config.space.T};

    const space::Vector lambda = resolve_eigenvalues(config);
    space::BasisChoice basis = space::IdentityBasis{};
    if (config.covariance.basisSeed) {
        basis = space::SeededBasis{*config.covariance.basisSeed};
    }
    s.covariance = space::make_covariance(lambda, basis, resolve_tail_mass(config));

    s.sampler.horizon = config.space.T;
    s.sampler.nScheduled = config.space.nScheduled;
    if (config.drivers.explicitIncrements) {
        const auto& rows = *config.drivers.explicitIncrements;
        if (static_cast<int>(rows.size()) != J) {
            invalid("drivers.explicit", "expected J = " + std::to_string(J) + " rows");
        }
        for (std::size_t j = 0; j < rows.size(); ++j) {
            if (static_cast<int>(rows[j].size()) != config.space.nScheduled) {
                invalid("drivers.explicit[" + std::to_string(j) + "]",
                        "expected nScheduled = " + std::to_string(config.space.nScheduled) + " increments");
            }
        }
        s.sampler.explicitIncrements = rows;
        // Explicit paths carry no law; only the component count matters.
        s.sampler.specs.assign(static_cast<std::size_t>(J), process::from_preset(process::Preset::brownian()));
    } else {
        const auto& entries = config.drivers.entries;
        if (entries.size() != 1 && static_cast<int>(entries.size()) != J) {
            invalid("drivers", "expected one entry or J = " + std::to_string(J) + " entries");
        }
        std::vector<process::StandardLevySpec> specs;
        for (std::size_t j = 0; j < entries.size(); ++j) {
            try {
                specs.push_back(driver_spec(entries[j]));
            } catch (const Error& e) {
                invalid("drivers[" + std::to_string(j) + "]", e.what());
            }
        }
        try {
            s.sampler.specs = process::make_standard_specs(J, std::move(specs));
        } catch (const Error& e) {
            invalid("drivers", e.what());
        }
    }

    if (config.integrand) {
        const auto& in = *config.integrand;
        auto& out = s.integrand;
        out.family = in.family == "simple" ? verify::IntegrandFamily::Simple : verify::IntegrandFamily::Grid;
        if (in.evaluator == "zero") {
            out.evaluator = verify::Evaluator::Zero;
        } else if (in.evaluator == "constant") {
            out.evaluator = verify::Evaluator::Constant;
        } else if (in.evaluator == "explicit") {
            out.evaluator = verify::Evaluator::Explicit;
        } else {
            out.evaluator = verify::Evaluator::Feedback;
        }
        out.seed = in.seed;
        out.scale = in.scale;
        out.breakpoints = in.breakpoints;
        for (std::size_t i = 0; i < in.values.size(); ++i) {
            const std::string key = "integrand.values[" + std::to_string(i) + "]";
            const auto& rows = in.values[i];
            if (static_cast<int>(rows.size()) != config.space.dH) {
                invalid(key, "expected dH = " + std::to_string(config.space.dH) + " rows");
            }
            space::Matrix m(config.space.dH, J);
            for (int r = 0; r < config.space.dH; ++r) {
                if (static_cast<int>(rows[static_cast<std::size_t>(r)].size()) != J) {
                    invalid(key, "expected J = " + std::to_string(J) + " columns");
                }
                for (int c = 0; c < J; ++c) {
                    m(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
                }
            }
            out.values.push_back(m);
        }
    }
    try {
        s.validate();
    } catch (const Error& e) {
        invalid("config", e.what());
    }
    return s;
}

verify::CheckSpec build_check(const ExperimentConfig& config, const CheckEntry& entry)
{
    verify::CheckSpec spec;
    spec.kind = verify::parse_check(entry.name);
    spec.nPaths = entry.nPaths.value_or(config.mc.nPaths);
    spec.seed = entry.seed.value_or(config.mc.seed);
    spec.variant = entry.variant.value_or("");
    spec.relTol = entry.relTol.value_or(spec.relTol);
    spec.sigmas = entry.sigmas.value_or(spec.sigmas);
    spec.fault = entry.fault ? verify::parse_fault(*entry.fault) : verify::Fault::None;
    spec.jsub = entry.jsub.value_or(std::min(spec.jsub, config.space.J));
    spec.pairs = entry.pairs.value_or(std::vector<std::pair<int, int>>{});
    spec.rotations = entry.rotations.value_or(spec.rotations);
    return spec;
}

std::vector<verify::CheckSpec> build_checks(const ExperimentConfig& config)
{
    std::vector<verify::CheckSpec> specs;
    if (config.checks.empty()) {
        for (const auto& name : verify::check_names()) {
            specs.push_back(build_check(config, CheckEntry::named(name)));
        }
        return specs;
    }
    for (const auto& entry : config.checks) {
        specs.push_back(build_check(config, entry));
    }
    return specs;
}

} // namespace itolevy::cli
