#include "cachesort/cache.hpp"

#include <istream>
#include <ostream>

namespace cachesort {

std::string tag_name(MemTag tag) {
    switch (tag.kind) {
        case TagKind::Count: return "COUNT";
        case TagKind::Data: return "DATA";
        case TagKind::Dest: return "DEST";
        case TagKind::Src: return "SRC";
        case TagKind::Seq: return "SEQ" + std::to_string(tag.index);
        case TagKind::Other: return "OTHER";
    }
    return "OTHER";
}

MemTag parse_tag(const std::string& name) {
    if (name == "COUNT") return MemTag::count();
    if (name == "DATA") return MemTag::data();
    if (name == "DEST") return MemTag::dest();
    if (name == "SRC") return MemTag::src();
    if (name == "OTHER") return MemTag::other();
    if (name.rfind("SEQ", 0) == 0 && name.size() > 3)
        return MemTag::seq(static_cast<uint32_t>(std::stoul(name.substr(3))));
    throw std::invalid_argument("unknown access tag: " + name);
}

std::vector<MemTag> MissStats::touched_tags() const {
    std::vector<MemTag> tags;
    static constexpr TagKind kOrder[] = {TagKind::Src,  TagKind::Count, TagKind::Data,
                                         TagKind::Dest, TagKind::Other};
    for (TagKind k : kOrder) {
        MemTag t{k, 0};
        if (at(t).accesses > 0) tags.push_back(t);
    }
    for (uint32_t i = 0; i < seq_.size(); i++)
        if (seq_[i].accesses > 0) tags.push_back(MemTag::seq(i));
    return tags;
}

MissStats run_trace(CacheGeometry geom, uint64_t address_space, std::span<const MemRef> trace) {
    Simulator sim(geom, address_space);
    for (size_t i = 0; i < trace.size(); i++) {
        try {
            sim.access(trace[i]);
        } catch (const std::out_of_range& e) {
            throw std::out_of_range("trace position " + std::to_string(i) + ": " + e.what());
        }
    }
    return sim.stats();
}

void write_trace(std::ostream& out, std::span<const MemRef> trace) {
    for (const MemRef& r : trace) out << tag_name(r.tag) << ',' << r.address << '\n';
}

std::vector<MemRef> read_trace(std::istream& in) {
    std::vector<MemRef> trace;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto comma = line.find(',');
        if (comma == std::string::npos)
            throw std::invalid_argument("trace line missing comma: " + line);
        MemRef r;
        r.tag = parse_tag(line.substr(0, comma));
        r.address = std::stoull(line.substr(comma + 1));
        trace.push_back(r);
    }
    return trace;
}

}  // namespace cachesort
