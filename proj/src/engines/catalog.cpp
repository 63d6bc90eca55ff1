#include <polydawg/engines/catalog.hpp>

#include <polydawg/cif.hpp>
#include <polydawg/engines/array.hpp>
#include <polydawg/engines/keyvalue.hpp>
#include <polydawg/engines/relational.hpp>
#include <polydawg/error.hpp>

#include <json.hpp>

#include <fstream>
#include <mutex>

namespace polydawg {

namespace fs = std::filesystem;
using nlohmann::json;

bool valid_object_name(std::string_view name)
{
    if (name.empty() or not (std::isalpha(static_cast<unsigned char>(name[0])) or name[0] == '_')) return false;
    for (char c : name)
        if (not (std::isalnum(static_cast<unsigned char>(c)) or c == '_')) return false;
    return true;
}

std::unique_ptr<EngineCatalog> EngineCatalog::with_default_engines()
{
    auto c = std::make_unique<EngineCatalog>();
    c->add_engine(std::make_unique<RelationalEngine>("rel"));
    c->add_engine(std::make_unique<KeyValueEngine>("kv"));
    c->add_engine(std::make_unique<ArrayEngine>("arr"));
    return c;
}

Engine * EngineCatalog::find_engine(const std::string &id) const
{
    for (const auto &e : engines_)
        if (e->id() == id) return e.get();
    return nullptr;
}

void EngineCatalog::add_engine(std::unique_ptr<Engine> engine)
{
    std::unique_lock lock(mutex_);
    if (find_engine(engine->id())) throw Error(ErrorKind::duplicate, "engine " + engine->id() + " already exists");
    engines_.push_back(std::move(engine));
}

Engine & EngineCatalog::engine(const std::string &id) const
{
    auto *e = find_engine(id);
    if (not e) throw Error(ErrorKind::not_found, "unknown engine " + id);
    return *e;
}

std::vector<std::string> EngineCatalog::engine_ids() const
{
    std::vector<std::string> out;
    for (const auto &e : engines_) out.push_back(e->id());
    return out;
}

void EngineCatalog::load(const std::string &engine_id, const std::string &object, const CanonicalTable &table,
                         const LoadOptions &options, bool temporary)
{
    if (not valid_object_name(object)) throw Error(ErrorKind::validation, "invalid object name '" + object + "'");
    auto &e = engine(engine_id);
    std::unique_lock lock(mutex_);
    if (auto it = directory_.find(object); it != directory_.end())
        throw Error(ErrorKind::duplicate, "object " + object + " already exists on engine " + it->second);
    e.load(object, table, options);
    directory_.emplace(object, engine_id);
    if (temporary) temporaries_.insert(object);
}

std::optional<std::string> EngineCatalog::locate(const std::string &object) const
{
    std::shared_lock lock(mutex_);
    auto it = directory_.find(object);
    if (it == directory_.end()) return std::nullopt;
    return it->second;
}

const std::string & EngineCatalog::engine_of(const std::string &object) const
{
    std::shared_lock lock(mutex_);
    auto it = directory_.find(object);
    if (it == directory_.end()) throw Error(ErrorKind::not_found, "unknown object " + object);
    return it->second;
}

ObjectPayload EngineCatalog::export_payload(const std::string &object) const
{
    return engine(engine_of(object)).export_payload(object);
}

CanonicalTable EngineCatalog::export_table(const std::string &engine_id, const std::string &object) const
{
    auto &e = engine(engine_id);
    if (not e.contains(object)) throw_unknown_object(engine_id, object);
    return e.export_table(object);
}

ObjectInfo EngineCatalog::describe(const std::string &object) const
{
    return engine(engine_of(object)).describe(object);
}

CanonicalTable EngineCatalog::execute_native(const std::string &engine_id, std::string_view native) const
{
    return engine(engine_id).execute_native(native);
}

bool EngineCatalog::drop(const std::string &object)
{
    std::unique_lock lock(mutex_);
    auto it = directory_.find(object);
    if (it == directory_.end()) return false;
    engine(it->second).drop(object);
    temporaries_.erase(object);
    directory_.erase(it);
    return true;
}

std::size_t EngineCatalog::drop_temporaries()
{
    std::size_t n = 0;
    for (const auto &name : temporaries()) n += drop(name);
    return n;
}

std::vector<std::string> EngineCatalog::temporaries() const
{
    std::shared_lock lock(mutex_);
    return {temporaries_.begin(), temporaries_.end()};
}

std::vector<std::pair<std::string, std::string>> EngineCatalog::objects() const
{
    std::shared_lock lock(mutex_);
    return {directory_.begin(), directory_.end()};
}

void EngineCatalog::save(const fs::path &dir) const
{
    fs::create_directories(dir / "objects");
    json manifest = json::object();
    manifest["objects"] = json::array();
    for (const auto &[name, engine_id] : objects()) {
        {
            std::shared_lock lock(mutex_);
            if (temporaries_.contains(name)) continue;
        }
        auto payload = engine(engine_id).export_payload(name);
        json dims = json::array();
        for (const auto &d : payload.options.dims) {
            json jd = {{"name", d.name}};
            if (d.length) jd["length"] = *d.length;
            if (d.keys) jd["keys"] = *d.keys;
            dims.push_back(std::move(jd));
        }
        manifest["objects"].push_back({{"name", name}, {"engine", engine_id}, {"key", payload.options.key},
                                       {"dims", std::move(dims)}});
        cif::write_file(dir / "objects" / (name + ".cif"), payload.table);
    }
    const auto tmp = dir / "catalog.json.tmp";
    {
        std::ofstream out(tmp);
        out << manifest.dump(2) << '\n';
        if (not out) throw Error(ErrorKind::storage, "cannot write " + tmp.string());
    }
    fs::rename(tmp, dir / "catalog.json");
}

void EngineCatalog::restore(const fs::path &dir)
{
    const auto path = dir / "catalog.json";
    if (not fs::exists(path)) return;
    std::ifstream in(path);
    json manifest;
    try {
        manifest = json::parse(in);
        for (const auto &o : manifest.at("objects")) {
            LoadOptions options;
            options.key = o.at("key").get<std::vector<std::string>>();
            for (const auto &jd : o.at("dims")) {
                DimSpec d{jd.at("name").get<std::string>(), std::nullopt, std::nullopt};
                if (jd.contains("length")) d.length = jd["length"].get<std::int64_t>();
                if (jd.contains("keys")) d.keys = jd["keys"].get<std::vector<std::string>>();
                options.dims.push_back(std::move(d));
            }
            const auto name = o.at("name").get<std::string>();
            load(o.at("engine").get<std::string>(), name, cif::read_file(dir / "objects" / (name + ".cif")), options);
        }
    } catch (const json::exception &e) {
        throw Error(ErrorKind::storage, "corrupt catalog manifest " + path.string() + ": " + e.what());
    }
}

}
