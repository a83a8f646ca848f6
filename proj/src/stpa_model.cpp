#include "rlstpa/stpa_model.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace rlstpa::stpa {

using nlohmann::json;

std::string to_string(UcaCategory c) {
    switch (c) {
        case UcaCategory::NotProviding: return "NotProviding";
        case UcaCategory::ProvidingCausesHazard: return "ProvidingCausesHazard";
        case UcaCategory::WrongTiming: return "WrongTiming";
        case UcaCategory::WrongDuration: return "WrongDuration";
    }
    throw std::logic_error("bad UcaCategory");
}

UcaCategory uca_category_from_string(const std::string& s) {
    if (s == "NotProviding") return UcaCategory::NotProviding;
    if (s == "ProvidingCausesHazard") return UcaCategory::ProvidingCausesHazard;
    if (s == "WrongTiming") return UcaCategory::WrongTiming;
    if (s == "WrongDuration") return UcaCategory::WrongDuration;
    throw std::runtime_error("unknown UCA category: " + s);
}

const Hazard* StpaModel::find_hazard(const std::string& id) const {
    for (const auto& h : hazards)
        if (h.id == id) return &h;
    return nullptr;
}

const UcaDefinition* StpaModel::find_uca(const std::string& id) const {
    for (const auto& u : uca_definitions)
        if (u.id == id) return &u;
    return nullptr;
}

namespace {

template <typename T>
void check_duplicates(const std::vector<T>& items, const char* kind,
                      std::vector<Violation>& out) {
    std::set<std::string> seen;
    for (const auto& item : items) {
        if (!seen.insert(item.id).second)
            out.push_back({item.id, std::string("duplicate ") + kind + " id: " + item.id});
    }
}

void check_links(const std::string& owner, const std::vector<std::string>& links,
                 const std::set<std::string>& universe, const char* target_kind,
                 std::vector<Violation>& out) {
    if (links.empty()) {
        out.push_back({owner, owner + " has an empty " + target_kind + " link list"});
        return;
    }
    for (const auto& ref : links) {
        if (!universe.count(ref))
            out.push_back({owner, owner + " links to unknown " + target_kind + " " + ref});
    }
}

}  // namespace

std::vector<Violation> validate_model(const StpaModel& model) {
    std::vector<Violation> out;

    check_duplicates(model.losses, "loss", out);
    check_duplicates(model.hazards, "hazard", out);
    check_duplicates(model.constraints, "constraint", out);
    check_duplicates(model.uca_definitions, "UCA", out);

    std::set<std::string> loss_ids, hazard_ids;
    for (const auto& l : model.losses) loss_ids.insert(l.id);
    for (const auto& h : model.hazards) hazard_ids.insert(h.id);

    for (const auto& l : model.losses)
        if (l.description.empty())
            out.push_back({l.id, l.id + " has an empty description"});
    for (const auto& h : model.hazards)
        check_links(h.id, h.linked_losses, loss_ids, "loss", out);
    for (const auto& c : model.constraints)
        check_links(c.id, c.linked_hazards, hazard_ids, "hazard", out);
    for (const auto& u : model.uca_definitions)
        check_links(u.id, u.linked_hazards, hazard_ids, "hazard", out);

    return out;
}

TraceRecord trace(const StpaModel& model, const std::string& hazard_id) {
    const Hazard* h = model.find_hazard(hazard_id);
    if (!h) throw std::out_of_range("unknown hazard id: " + hazard_id);

    TraceRecord rec;
    rec.hazard_id = hazard_id;
    rec.upstream_losses = h->linked_losses;
    for (const auto& c : model.constraints)
        if (std::find(c.linked_hazards.begin(), c.linked_hazards.end(), hazard_id) !=
            c.linked_hazards.end())
            rec.downstream_constraints.push_back(c.id);
    for (const auto& u : model.uca_definitions)
        if (std::find(u.linked_hazards.begin(), u.linked_hazards.end(), hazard_id) !=
            u.linked_hazards.end())
            rec.downstream_ucas.push_back(u.id);
    return rec;
}

StpaModel default_drone_model() {
    StpaModel m;
    m.losses = {
        {"L-1", "Death or injury of a person"},
        {"L-2", "Property damage"},
        {"L-3", "Drone is damaged or destroyed"},
        {"L-4", "Loss of mission objective"},
    };
    m.hazards = {
        {"H-1",
         "Drone violates minimum separation from obstacles (environmental or other "
         "aircraft)",
         {"L-1", "L-2", "L-3"}},
        {"H-2", "Drone fails to reach target destination", {"L-4"}},
        {"H-3", "Drone fails to recover from excessive maneuver", {"L-3", "L-4"}},
    };
    m.constraints = {
        {"SC-1",
         "Drone must satisfy a minimum separation of 0.25m from obstacles encountered",
         {"H-1"}},
        {"SC-2",
         "If the drone violates minimum separation, then the violation must be detected "
         "and measures taken to prevent collision",
         {"H-1"}},
    };
    m.uca_definitions = {
        {"UCA-1", "Obstacle Avoidance", UcaCategory::NotProviding,
         "RL agent fails to provide Obstacle Avoidance control action when approaching "
         "critical environmental obstacles",
         {"H-1"}},
        {"UCA-2", "Obstacle Avoidance", UcaCategory::ProvidingCausesHazard,
         "RL agent provides Obstacle Avoidance control action when no obstacle is "
         "present",
         {"H-3"}},
        {"UCA-3", "Obstacle Avoidance", UcaCategory::WrongTiming,
         "RL agent fails to provide Obstacle Avoidance control action with sufficient "
         "time to safely avoid the obstacle",
         {"H-1"}},
        {"UCA-4", "Obstacle Avoidance", UcaCategory::WrongDuration,
         "RL agent fails to apply the Obstacle Avoidance action with sufficient "
         "magnitude to avoid obstacles with safe distance",
         {"H-1"}},
    };
    return m;
}

namespace {

json links_to_json(const std::vector<std::string>& links) { return json(links); }

std::vector<std::string> links_from_json(const json& j) {
    return j.get<std::vector<std::string>>();
}

}  // namespace

std::string save_model(const StpaModel& model) {
    json j;
    j["losses"] = json::array();
    for (const auto& l : model.losses)
        j["losses"].push_back({{"id", l.id}, {"description", l.description}});
    j["hazards"] = json::array();
    for (const auto& h : model.hazards)
        j["hazards"].push_back({{"id", h.id},
                                {"description", h.description},
                                {"linked_losses", links_to_json(h.linked_losses)}});
    j["constraints"] = json::array();
    for (const auto& c : model.constraints)
        j["constraints"].push_back({{"id", c.id},
                                    {"description", c.description},
                                    {"linked_hazards", links_to_json(c.linked_hazards)}});
    j["ucas"] = json::array();
    for (const auto& u : model.uca_definitions)
        j["ucas"].push_back({{"id", u.id},
                             {"control_action", u.control_action},
                             {"category", to_string(u.category)},
                             {"description", u.description},
                             {"linked_hazards", links_to_json(u.linked_hazards)}});
    return j.dump(2) + "\n";
}

StpaModel load_model(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("model parse error: ") + e.what());
    }
    try {
        StpaModel m;
        for (const auto& l : j.at("losses"))
            m.losses.push_back({l.at("id"), l.at("description")});
        for (const auto& h : j.at("hazards"))
            m.hazards.push_back({h.at("id"), h.at("description"),
                                 links_from_json(h.at("linked_losses"))});
        for (const auto& c : j.at("constraints"))
            m.constraints.push_back({c.at("id"), c.at("description"),
                                     links_from_json(c.at("linked_hazards"))});
        for (const auto& u : j.at("ucas"))
            m.uca_definitions.push_back({u.at("id"), u.at("control_action"),
                                         uca_category_from_string(u.at("category")),
                                         u.at("description"),
                                         links_from_json(u.at("linked_hazards"))});
        return m;
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("model schema error: ") + e.what());
    }
}

StpaModel load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open model file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return load_model(ss.str());
}

void save_model_file(const StpaModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write model file: " + path);
    out << save_model(model);
}

}  // namespace rlstpa::stpa
