#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace catembed::iso {

/// How the digit positions of a designation turn into millimetres.
struct NumericRule {
    enum class Mode { AsIs, Tenths };
    Mode mode = Mode::AsIs;

    double apply(int digits) const {
        return mode == Mode::AsIs ? static_cast<double>(digits)
                                  : static_cast<double>(digits) / 10.0;
    }
};

/// Lookup table decoding the four letter positions and two digit pairs of an
/// indexable-insert designation. The table is data, not code: catalogs vary,
/// so it ships as a JSON document with a built-in default for tests.
struct IsoCodeTable {
    struct ShapeInfo {
        std::string description;
        std::optional<double> included_angle;  // degrees
    };
    struct ToleranceInfo {
        double length_tolerance = 0.0;     // mm
        double thickness_tolerance = 0.0;  // mm
    };

    std::map<char, ShapeInfo> shapes;
    std::map<char, double> clearance_angles;  // degrees
    std::map<char, ToleranceInfo> tolerances;
    std::map<char, std::string> characteristics;
    NumericRule size_rule;
    NumericRule thickness_rule;

    void validate() const;

    static IsoCodeTable load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    /// Default table compiled from the common indexable-insert designation
    /// letters; enough coverage for the shipped catalog.
    static IsoCodeTable builtin_default();
};

/// Structured fields decoded from one designation code. Unknown positions stay
/// unset rather than zero-filled.
struct InsertFeatures {
    std::optional<std::string> shape_description;
    std::optional<double> included_angle;            // degrees
    std::optional<double> clearance_angle;           // degrees
    std::optional<double> cutting_length;            // mm
    std::optional<double> thickness;                 // mm
    std::optional<double> cutting_length_tolerance;  // mm
    std::optional<double> thickness_tolerance;       // mm
    std::optional<std::string> characteristic;
};

/// Which character positions (0-based, inclusive ranges) feed each field.
/// Exposed so tests can audit the mapping.
std::map<std::string, std::pair<int, int>> field_positions();

/// Decodes an 8-character designation: shape letter, clearance letter,
/// tolerance letter, characteristic letter, two size digits, two thickness
/// digits. Shorter codes parse the positions present; unmapped letters flag
/// the field unknown instead of failing.
InsertFeatures parse_iso(std::string_view code, const IsoCodeTable& table);

}  // namespace catembed::iso
