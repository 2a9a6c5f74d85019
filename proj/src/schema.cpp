#include "lqgame/schema.hpp"

#include <cmath>

namespace lqgame::schema {

namespace {

using io::Json;

class Validator {
 public:
  explicit Validator(const Json& root) : root_(root) {}

  void check(const Json& value, const Json& schema, const std::string& path,
             std::vector<std::string>& errors) const {
    if (schema.is_boolean()) {
      if (!schema.get<bool>()) errors.push_back(at(path) + "no value is allowed here");
      return;
    }
    if (!schema.is_object()) return;

    if (auto ref = schema.find("$ref"); ref != schema.end()) {
      check(value, resolve(ref->get<std::string>()), path, errors);
      return;
    }
    if (auto t = schema.find("type"); t != schema.end() && !type_matches(value, *t)) {
      errors.push_back(at(path) + "expected type " + t->dump());
      return;
    }
    if (auto e = schema.find("enum"); e != schema.end()) {
      bool found = false;
      for (const auto& option : *e) found = found || option == value;
      if (!found) errors.push_back(at(path) + "must be one of " + e->dump());
    }
    if (auto c = schema.find("const"); c != schema.end() && *c != value) {
      errors.push_back(at(path) + "must equal " + c->dump());
    }
    if (value.is_number()) check_number(value.get<double>(), schema, path, errors);
    if (value.is_string()) {
      if (auto m = schema.find("minLength");
          m != schema.end() && value.get<std::string>().size() < m->get<std::size_t>()) {
        errors.push_back(at(path) + "string is too short");
      }
    }
    if (value.is_array()) check_array(value, schema, path, errors);
    if (value.is_object()) check_object(value, schema, path, errors);

    if (auto all = schema.find("allOf"); all != schema.end()) {
      for (const auto& sub : *all) check(value, sub, path, errors);
    }
    if (auto any = schema.find("anyOf"); any != schema.end()) {
      if (count_matches(value, *any, path) == 0) {
        errors.push_back(at(path) + "matches none of the allowed forms");
      }
    }
    if (auto one = schema.find("oneOf"); one != schema.end()) {
      const std::size_t hits = count_matches(value, *one, path);
      if (hits == 0) {
        // Report the closest alternative so the message says what is wrong.
        std::vector<std::string> best;
        for (const auto& sub : *one) {
          std::vector<std::string> trial;
          check(value, sub, path, trial);
          if (best.empty() || trial.size() < best.size()) best = std::move(trial);
        }
        errors.push_back(at(path) + "matches none of the allowed forms");
        errors.insert(errors.end(), best.begin(), best.end());
      } else if (hits > 1) {
        errors.push_back(at(path) + "matches more than one allowed form");
      }
    }
  }

 private:
  static std::string at(const std::string& path) { return (path.empty() ? "/" : path) + ": "; }

  const Json& resolve(const std::string& ref) const {
    if (ref.rfind("#/", 0) != 0) throw io::ConfigError("unsupported schema reference " + ref);
    try {
      return root_.at(Json::json_pointer(ref.substr(1)));
    } catch (const Json::exception&) {
      throw io::ConfigError("dangling schema reference " + ref);
    }
  }

  static bool single_type(const Json& value, const std::string& type) {
    if (type == "object") return value.is_object();
    if (type == "array") return value.is_array();
    if (type == "string") return value.is_string();
    if (type == "boolean") return value.is_boolean();
    if (type == "null") return value.is_null();
    if (type == "number") return value.is_number();
    if (type == "integer") {
      if (value.is_number_integer()) return true;
      if (!value.is_number_float()) return false;
      const double v = value.get<double>();
      return std::isfinite(v) && std::floor(v) == v;
    }
    return false;
  }

  static bool type_matches(const Json& value, const Json& type) {
    if (type.is_string()) return single_type(value, type.get<std::string>());
    for (const auto& t : type) {
      if (single_type(value, t.get<std::string>())) return true;
    }
    return false;
  }

  std::size_t count_matches(const Json& value, const Json& alternatives,
                            const std::string& path) const {
    std::size_t hits = 0;
    for (const auto& sub : alternatives) {
      std::vector<std::string> trial;
      check(value, sub, path, trial);
      if (trial.empty()) ++hits;
    }
    return hits;
  }

  static void check_number(double v, const Json& schema, const std::string& path,
                           std::vector<std::string>& errors) {
    auto bound = [&](const char* key) -> std::optional<double> {
      auto it = schema.find(key);
      if (it == schema.end() || !it->is_number()) return std::nullopt;
      return it->get<double>();
    };
    if (auto b = bound("minimum"); b && !(v >= *b)) {
      errors.push_back(at(path) + "must be >= " + std::to_string(*b));
    }
    if (auto b = bound("maximum"); b && !(v <= *b)) {
      errors.push_back(at(path) + "must be <= " + std::to_string(*b));
    }
    if (auto b = bound("exclusiveMinimum"); b && !(v > *b)) {
      errors.push_back(at(path) + "must be > " + std::to_string(*b));
    }
    if (auto b = bound("exclusiveMaximum"); b && !(v < *b)) {
      errors.push_back(at(path) + "must be < " + std::to_string(*b));
    }
  }

  void check_array(const Json& value, const Json& schema, const std::string& path,
                   std::vector<std::string>& errors) const {
    if (auto m = schema.find("minItems"); m != schema.end() && value.size() < m->get<std::size_t>()) {
      errors.push_back(at(path) + "needs at least " + m->dump() + " items");
    }
    if (auto m = schema.find("maxItems"); m != schema.end() && value.size() > m->get<std::size_t>()) {
      errors.push_back(at(path) + "allows at most " + m->dump() + " items");
    }
    if (auto items = schema.find("items"); items != schema.end()) {
      for (std::size_t k = 0; k < value.size(); ++k) {
        check(value[k], *items, path + "/" + std::to_string(k), errors);
      }
    }
  }

  void check_object(const Json& value, const Json& schema, const std::string& path,
                    std::vector<std::string>& errors) const {
    if (auto req = schema.find("required"); req != schema.end()) {
      for (const auto& key : *req) {
        if (!value.contains(key.get<std::string>())) {
          errors.push_back(at(path) + "missing required property \"" + key.get<std::string>() + "\"");
        }
      }
    }
    const auto props = schema.find("properties");
    const auto extra = schema.find("additionalProperties");
    for (const auto& [key, child] : value.items()) {
      const std::string child_path = path + "/" + key;
      if (props != schema.end() && props->contains(key)) {
        check(child, props->at(key), child_path, errors);
      } else if (extra != schema.end()) {
        if (extra->is_boolean() && !extra->get<bool>()) {
          errors.push_back(at(path) + "unknown property \"" + key + "\"");
        } else {
          check(child, *extra, child_path, errors);
        }
      }
    }
  }

  const Json& root_;
};

}  // namespace

std::vector<std::string> validate(const io::Json& instance, const io::Json& schema) {
  std::vector<std::string> errors;
  Validator(schema).check(instance, schema, "", errors);
  return errors;
}

}  // namespace lqgame::schema
