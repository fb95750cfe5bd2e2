#include "qm2arl/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace qm2arl::io {

namespace {

using nlohmann::json;

std::string json_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size() + 2);
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    return out;
}

void append_pole_lists(std::string& out, const std::vector<qnn::PoleParams>& agent_poles) {
    out += '[';
    for (std::size_t n = 0; n < agent_poles.size(); ++n) {
        if (n) out += ", ";
        out += '[';
        for (std::size_t j = 0; j < agent_poles[n].size(); ++j) {
            if (j) out += ", ";
            out += format_double(agent_poles[n][j]);
        }
        out += ']';
    }
    out += ']';
}

}  // namespace

std::string format_double(double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

void atomic_write_text(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(target.parent_path(), ec);
        if (ec) throw std::runtime_error("cannot create directory " + target.parent_path().string());
    }
    const fs::path temp = target.parent_path() / (target.filename().string() + ".tmp");
    {
        std::ofstream out(temp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + temp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw std::runtime_error("write failed for " + temp.string());
    }
    std::error_code ec;
    fs::rename(temp, target, ec);
    if (ec) throw std::runtime_error("rename failed for " + target.string() + ": " + ec.message());
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

bool file_exists(const std::string& path) { return std::filesystem::exists(path); }

std::string csv_text(const std::string& header,
                     const std::vector<std::vector<std::string>>& rows) {
    std::string out = header;
    out += '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += row[i];
        }
        out += '\n';
    }
    return out;
}

std::string pole_memory_to_text(const train::PoleMemoryStore& store) {
    std::string out = "{\n  \"format_version\": 1,\n  \"entries\": [";
    const auto& entries = store.entries();
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& e = entries[i];
        out += i ? ",\n    {" : "\n    {";
        out += "\"label\": \"" + json_escape(e.label) + "\", ";
        out += "\"variant\": \"" + json_escape(e.variant) + "\", ";
        out += "\"epoch\": " + std::to_string(e.epoch) + ", ";
        out += "\"alpha_degrees\": " + format_double(e.alpha_degrees) + ", ";
        out += "\"agent_poles\": ";
        append_pole_lists(out, e.agent_poles);
        out += '}';
    }
    out += entries.empty() ? "]\n}\n" : "\n  ]\n}\n";
    return out;
}

train::PoleMemoryStore pole_memory_from_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("pole memory parse error: ") + e.what());
    }
    try {
        if (!doc.is_object() || doc.at("format_version").get<int>() != 1)
            throw std::runtime_error("pole memory parse error: unsupported format_version");
        train::PoleMemoryStore store;
        for (const auto& item : doc.at("entries")) {
            train::PoleMemoryEntry entry;
            entry.label = item.at("label").get<std::string>();
            entry.variant = item.value("variant", std::string{});
            entry.epoch = item.value("epoch", 0);
            entry.alpha_degrees = item.value("alpha_degrees", 0.0);
            for (const auto& vec : item.at("agent_poles"))
                entry.agent_poles.push_back(vec.get<qnn::PoleParams>());
            store.save(std::move(entry));
        }
        return store;
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("pole memory parse error: ") + e.what());
    }
}

void write_pole_memory(const std::string& path, const train::PoleMemoryStore& store) {
    atomic_write_text(path, pole_memory_to_text(store));
}

train::PoleMemoryStore read_pole_memory(const std::string& path) {
    return pole_memory_from_text(read_text(path));
}

std::string model_to_text(const ModelFile& model) {
    std::string out = "{\n  \"format_version\": 1,\n  \"kind\": \"qnn-angles\",\n";
    out += "  \"num_qubits\": " + std::to_string(model.config.num_qubits) + ",\n";
    out += "  \"depth\": " + std::to_string(model.config.depth) + ",\n";
    out += "  \"beta\": " + format_double(model.config.beta) + ",\n";
    out += "  \"action_qubits\": [";
    for (std::size_t a = 0; a < model.config.action_qubits.size(); ++a) {
        if (a) out += ", ";
        out += '[';
        for (std::size_t i = 0; i < model.config.action_qubits[a].size(); ++i) {
            if (i) out += ", ";
            out += std::to_string(model.config.action_qubits[a][i]);
        }
        out += ']';
    }
    out += "],\n";
    out += "  \"env\": \"" + json_escape(model.env_label) + "\",\n";
    out += "  \"seed\": " + std::to_string(model.seed) + ",\n";
    out += "  \"alpha_degrees\": " + format_double(model.alpha_degrees) + ",\n";
    out += "  \"epochs\": " + std::to_string(model.epochs) + ",\n";
    out += "  \"phi\": [";
    for (std::size_t k = 0; k < model.phi.size(); ++k) {
        if (k) out += ", ";
        out += format_double(model.phi[k]);
    }
    out += "]\n}\n";
    return out;
}

ModelFile model_from_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("model parse error: ") + e.what());
    }
    try {
        if (!doc.is_object() || doc.at("format_version").get<int>() != 1 ||
            doc.at("kind").get<std::string>() != "qnn-angles")
            throw std::runtime_error("model parse error: not a qnn-angles file");
        ModelFile model;
        model.config.num_qubits = doc.at("num_qubits").get<int>();
        model.config.depth = doc.at("depth").get<int>();
        model.config.beta = doc.at("beta").get<double>();
        model.config.action_qubits =
            doc.at("action_qubits").get<std::vector<std::vector<int>>>();
        model.env_label = doc.value("env", std::string{});
        model.seed = doc.value("seed", std::uint64_t{0});
        model.alpha_degrees = doc.value("alpha_degrees", 0.0);
        model.epochs = doc.value("epochs", 0);
        model.phi = doc.at("phi").get<qnn::AngleParams>();
        model.config.validate();
        if (static_cast<int>(model.phi.size()) != model.config.num_angles())
            throw std::runtime_error("model parse error: angle vector length mismatch");
        return model;
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("model parse error: ") + e.what());
    }
}

void write_model(const std::string& path, const ModelFile& model) {
    atomic_write_text(path, model_to_text(model));
}

ModelFile read_model(const std::string& path) { return model_from_text(read_text(path)); }

}  // namespace qm2arl::io
