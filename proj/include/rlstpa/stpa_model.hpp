#pragma once

#include <string>
#include <vector>

namespace rlstpa::stpa {

struct Loss {
    std::string id;           // e.g. "L-1"
    std::string description;

    bool operator==(const Loss&) const = default;
};

struct Hazard {
    std::string id;
    std::string description;              // a system state, not a component failure
    std::vector<std::string> linked_losses;

    bool operator==(const Hazard&) const = default;
};

struct SystemConstraint {
    std::string id;
    std::string description;
    std::vector<std::string> linked_hazards;

    bool operator==(const SystemConstraint&) const = default;
};

// The four canonical UCA categories, one per guide-word row.
enum class UcaCategory {
    NotProviding,
    ProvidingCausesHazard,
    WrongTiming,
    WrongDuration,
};

std::string to_string(UcaCategory c);
UcaCategory uca_category_from_string(const std::string& s);

struct UcaDefinition {
    std::string id;
    std::string control_action;
    UcaCategory category = UcaCategory::NotProviding;
    std::string description;
    std::vector<std::string> linked_hazards;

    bool operator==(const UcaDefinition&) const = default;
};

struct StpaModel {
    std::vector<Loss> losses;
    std::vector<Hazard> hazards;
    std::vector<SystemConstraint> constraints;
    std::vector<UcaDefinition> uca_definitions;

    const Hazard* find_hazard(const std::string& id) const;
    const UcaDefinition* find_uca(const std::string& id) const;

    bool operator==(const StpaModel&) const = default;
};

struct Violation {
    std::string entity_id;  // offending entity
    std::string message;
};

// One entry per dangling reference, duplicate id, or empty link list.
// Empty report = valid model.
std::vector<Violation> validate_model(const StpaModel& model);

struct TraceRecord {
    std::string hazard_id;
    std::vector<std::string> upstream_losses;        // hazard's own linked losses
    std::vector<std::string> downstream_constraints; // constraints referencing it
    std::vector<std::string> downstream_ucas;        // UCAs referencing it
};

// Throws std::out_of_range when hazard_id is absent.
TraceRecord trace(const StpaModel& model, const std::string& hazard_id);

// Drone package-delivery case study: L-1..L-4, H-1..H-3, SC-1..SC-2, UCA-1..UCA-4.
// Hazard->loss links are assigned by this harness (H-1 -> L-1..L-3, H-2 -> L-4,
// H-3 -> L-3,L-4); they are editable via the model file.
StpaModel default_drone_model();

// JSON text schema; save/load round-trips exactly.
std::string save_model(const StpaModel& model);
StpaModel load_model(const std::string& json_text);   // throws std::runtime_error on parse/schema error
StpaModel load_model_file(const std::string& path);
void save_model_file(const StpaModel& model, const std::string& path);

}  // namespace rlstpa::stpa
