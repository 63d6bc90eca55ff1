#include <polydawg/engines/engine.hpp>

#include <polydawg/error.hpp>

namespace polydawg {

const char * to_string(Model m)
{
    switch (m) {
        case Model::relational: return "relational";
        case Model::keyvalue:   return "keyvalue";
        case Model::array:      return "array";
    }
    return "?";
}

std::optional<Model> parse_model(std::string_view s)
{
    if (s == "relational") return Model::relational;
    if (s == "keyvalue") return Model::keyvalue;
    if (s == "array") return Model::array;
    return std::nullopt;
}

void throw_unknown_object(const std::string &engine, const std::string &name)
{
    throw Error(ErrorKind::not_found, "unknown object " + name + " on engine " + engine);
}

}
