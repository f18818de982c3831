#include "catembed/iso.hpp"

#include <cctype>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "catembed/log.hpp"

namespace catembed::iso {

using nlohmann::json;

namespace {

std::string rule_to_string(const NumericRule& rule) {
    return rule.mode == NumericRule::Mode::AsIs ? "as_is" : "tenths";
}

NumericRule rule_from_string(const std::string& s) {
    NumericRule rule;
    if (s == "as_is") rule.mode = NumericRule::Mode::AsIs;
    else if (s == "tenths") rule.mode = NumericRule::Mode::Tenths;
    else throw std::invalid_argument("iso table: unknown numeric rule " + s);
    return rule;
}

char parse_letter_key(const std::string& key, const char* section) {
    if (key.size() != 1 || !std::isalpha(static_cast<unsigned char>(key[0])))
        throw std::invalid_argument(std::string("iso table: bad letter key '") + key +
                                    "' in section " + section);
    // Codes are matched upper-cased, so table keys live in upper case too;
    // otherwise a lower-case entry could never be hit by a lookup.
    return static_cast<char>(std::toupper(static_cast<unsigned char>(key[0])));
}

}  // namespace

void IsoCodeTable::validate() const {
    if (shapes.empty() || clearance_angles.empty() || tolerances.empty() ||
        characteristics.empty())
        throw std::invalid_argument("iso table: all four letter sections are required");
    for (const auto& [letter, info] : shapes) {
        if (info.description.empty())
            throw std::invalid_argument(std::string("iso table: shape ") + letter +
                                        " has no description");
        if (info.included_angle &&
            (*info.included_angle < 0.0 || *info.included_angle > 90.0))
            throw std::invalid_argument(std::string("iso table: shape ") + letter +
                                        " included angle out of [0, 90]");
    }
    for (const auto& [letter, angle] : clearance_angles)
        if (angle < 0.0 || angle > 90.0)
            throw std::invalid_argument(std::string("iso table: clearance ") + letter +
                                        " angle out of [0, 90]");
    for (const auto& [letter, tol] : tolerances)
        if (tol.length_tolerance <= 0.0 || tol.thickness_tolerance <= 0.0)
            throw std::invalid_argument(std::string("iso table: tolerance ") + letter +
                                        " must be positive");
}

IsoCodeTable IsoCodeTable::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("iso table: cannot open " + path.string());
    json doc = json::parse(in);
    IsoCodeTable table;

    for (const auto& [key, value] : doc.at("shapes").items()) {
        const char letter = parse_letter_key(key, "shapes");
        if (table.shapes.count(letter))
            throw std::invalid_argument(std::string("iso table: duplicate shape letter ") +
                                        letter);
        ShapeInfo info;
        info.description = value.at("description").get<std::string>();
        if (value.contains("included_angle") && !value["included_angle"].is_null())
            info.included_angle = value["included_angle"].get<double>();
        table.shapes.emplace(letter, std::move(info));
    }
    for (const auto& [key, value] : doc.at("clearance_angles").items())
        table.clearance_angles.emplace(parse_letter_key(key, "clearance_angles"),
                                       value.get<double>());
    for (const auto& [key, value] : doc.at("tolerances").items()) {
        ToleranceInfo tol;
        tol.length_tolerance = value.at("length_tolerance").get<double>();
        tol.thickness_tolerance = value.at("thickness_tolerance").get<double>();
        table.tolerances.emplace(parse_letter_key(key, "tolerances"), tol);
    }
    for (const auto& [key, value] : doc.at("characteristics").items())
        table.characteristics.emplace(parse_letter_key(key, "characteristics"),
                                      value.get<std::string>());
    if (doc.contains("size_rule"))
        table.size_rule = rule_from_string(doc["size_rule"].get<std::string>());
    if (doc.contains("thickness_rule"))
        table.thickness_rule = rule_from_string(doc["thickness_rule"].get<std::string>());

    table.validate();
    return table;
}

void IsoCodeTable::save(const std::filesystem::path& path) const {
    validate();
    json doc;
    for (const auto& [letter, info] : shapes) {
        json item;
        item["description"] = info.description;
        if (info.included_angle) item["included_angle"] = *info.included_angle;
        doc["shapes"][std::string(1, letter)] = std::move(item);
    }
    for (const auto& [letter, angle] : clearance_angles)
        doc["clearance_angles"][std::string(1, letter)] = angle;
    for (const auto& [letter, tol] : tolerances) {
        json item;
        item["length_tolerance"] = tol.length_tolerance;
        item["thickness_tolerance"] = tol.thickness_tolerance;
        doc["tolerances"][std::string(1, letter)] = std::move(item);
    }
    for (const auto& [letter, text] : characteristics)
        doc["characteristics"][std::string(1, letter)] = text;
    doc["size_rule"] = rule_to_string(size_rule);
    doc["thickness_rule"] = rule_to_string(thickness_rule);

    std::ofstream out(path);
    if (!out) throw std::runtime_error("iso table: cannot write " + path.string());
    out << doc.dump(2) << '\n';
}

IsoCodeTable IsoCodeTable::builtin_default() {
    IsoCodeTable t;
    t.shapes = {
        {'C', {"rhombus 80 degrees", 80.0}},
        {'D', {"rhombus 55 degrees", 55.0}},
        {'E', {"rhombus 75 degrees", 75.0}},
        {'H', {"hexagonal shape", std::nullopt}},
        {'L', {"rectangular shape", 90.0}},
        {'M', {"rhombus 85 degrees", 85.0}},
        {'R', {"circular shape", std::nullopt}},
        {'S', {"square shape", 90.0}},
        {'T', {"triangular shape", 60.0}},
        {'V', {"rhombus 35 degrees", 35.0}},
        {'W', {"rounded triangular shape", 80.0}},
    };
    t.clearance_angles = {
        {'A', 3.0}, {'B', 5.0},  {'C', 7.0},  {'D', 15.0}, {'E', 20.0},
        {'F', 25.0}, {'G', 30.0}, {'N', 0.0},  {'P', 11.0},
    };
    t.tolerances = {
        {'A', {0.025, 0.025}},
        {'E', {0.025, 0.025}},
        {'G', {0.025, 0.13}},
        {'M', {0.08, 0.13}},
        {'U', {0.13, 0.13}},
    };
    t.characteristics = {
        {'A', "cylindrical hole"},
        {'G', "hole with chipbreaker both sides"},
        {'M', "hole with chipbreaker one side"},
        {'N', "no hole"},
        {'T', "countersunk hole with chipbreaker"},
        {'W', "partly countersunk hole"},
    };
    t.size_rule.mode = NumericRule::Mode::AsIs;
    t.thickness_rule.mode = NumericRule::Mode::AsIs;
    return t;
}

std::map<std::string, std::pair<int, int>> field_positions() {
    return {
        {"shape_description", {0, 0}},
        {"included_angle", {0, 0}},
        {"clearance_angle", {1, 1}},
        {"cutting_length_tolerance", {2, 2}},
        {"thickness_tolerance", {2, 2}},
        {"characteristic", {3, 3}},
        {"cutting_length", {4, 5}},
        {"thickness", {6, 7}},
    };
}

namespace {

std::optional<int> parse_digit_pair(std::string_view code, int first, int last) {
    if (static_cast<int>(code.size()) <= last) return std::nullopt;
    int value = 0;
    for (int i = first; i <= last; ++i) {
        if (!std::isdigit(static_cast<unsigned char>(code[i]))) return std::nullopt;
        value = value * 10 + (code[i] - '0');
    }
    return value;
}

}  // namespace

InsertFeatures parse_iso(std::string_view code, const IsoCodeTable& table) {
    table.validate();
    // strip surrounding whitespace
    while (!code.empty() && std::isspace(static_cast<unsigned char>(code.front())))
        code.remove_prefix(1);
    while (!code.empty() && std::isspace(static_cast<unsigned char>(code.back())))
        code.remove_suffix(1);
    if (code.empty()) throw std::invalid_argument("parse_iso: empty code");

    InsertFeatures out;
    const auto positions = field_positions();

    auto letter_at = [&code](int pos) -> std::optional<char> {
        if (static_cast<int>(code.size()) <= pos) return std::nullopt;
        return static_cast<char>(
            std::toupper(static_cast<unsigned char>(code[pos])));
    };

    if (auto c = letter_at(positions.at("shape_description").first)) {
        auto it = table.shapes.find(*c);
        if (it != table.shapes.end()) {
            out.shape_description = it->second.description;
            out.included_angle = it->second.included_angle;
        } else {
            logging::debug(std::string("parse_iso: unmapped shape letter ") + *c);
        }
    }
    if (auto c = letter_at(positions.at("clearance_angle").first)) {
        auto it = table.clearance_angles.find(*c);
        if (it != table.clearance_angles.end()) out.clearance_angle = it->second;
    }
    if (auto c = letter_at(positions.at("cutting_length_tolerance").first)) {
        auto it = table.tolerances.find(*c);
        if (it != table.tolerances.end()) {
            out.cutting_length_tolerance = it->second.length_tolerance;
            out.thickness_tolerance = it->second.thickness_tolerance;
        }
    }
    if (auto c = letter_at(positions.at("characteristic").first)) {
        auto it = table.characteristics.find(*c);
        if (it != table.characteristics.end()) out.characteristic = it->second;
    }

    const auto [size_first, size_last] = positions.at("cutting_length");
    if (auto digits = parse_digit_pair(code, size_first, size_last))
        out.cutting_length = table.size_rule.apply(*digits);
    const auto [th_first, th_last] = positions.at("thickness");
    if (auto digits = parse_digit_pair(code, th_first, th_last))
        out.thickness = table.thickness_rule.apply(*digits);

    return out;
}

}  // namespace catembed::iso
