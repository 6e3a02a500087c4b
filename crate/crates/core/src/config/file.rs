//! Flat `key = value` config files with `[kind.id]` section headers.
//!
//! ```text
//! # top-level scalars
//! num_bs = 4
//! num_users = 8
//!
//! [server.0]
//! cpu_capacity = 1200
//!
//! [vm.0]
//! host_server = 0
//! capability = NAT, FW, TM
//!
//! [vnf.NAT]
//! pi_user = 0.00092
//!
//! [service.VoIP]
//! chain = NAT, FW, TM, FW, NAT
//!
//! [user.0]
//! bs = 0
//! service = VoIP
//!
//! [agent]
//! hidden_sizes = 64, 64
//! ```
//!
//! Omitted sections fall back to generated defaults: the built-in VNF and
//! service catalogs, `num_servers` default servers, `vms_per_server` VMs per
//! server able to run every VNF, and round-robin user requests.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use super::{
    builtin_services, builtin_vnfs, default_vms, round_robin_requests, validate_config,
    C5Interpretation, ConfigError, LearningConfig, NetworkConfig, ServerSpec, ServiceSpec,
    UserRequest, VmSpec, VnfSpec, DEFAULT_SERVERS, DEFAULT_VMS_PER_SERVER,
};

struct Entry {
    key: String,
    value: String,
    line: usize,
}

struct Section {
    kind: String,
    id: String,
    line: usize,
    entries: Vec<Entry>,
}

fn perr(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError::Parse {
        line,
        message: message.into(),
    }
}

fn split_sections(text: &str) -> Result<(Vec<Entry>, Vec<Section>), ConfigError> {
    let mut top = Vec::new();
    let mut sections: Vec<Section> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let header = rest
                .strip_suffix(']')
                .ok_or_else(|| perr(line, "unterminated section header"))?
                .trim();
            let (kind, id) = match header.split_once('.') {
                Some((k, id)) => (k.trim(), id.trim()),
                None => (header, ""),
            };
            if kind.is_empty() {
                return Err(perr(line, "empty section name"));
            }
            sections.push(Section {
                kind: kind.to_string(),
                id: id.to_string(),
                line,
                entries: Vec::new(),
            });
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| perr(line, format!("expected `key = value`, found {content:?}")))?;
        let entry = Entry {
            key: key.trim().to_string(),
            value: value.trim().to_string(),
            line,
        };
        if entry.key.is_empty() {
            return Err(perr(line, "empty key"));
        }
        match sections.last_mut() {
            Some(s) => s.entries.push(entry),
            None => top.push(entry),
        }
    }
    Ok((top, sections))
}

fn num<T: FromStr>(e: &Entry) -> Result<T, ConfigError> {
    e.value
        .parse()
        .map_err(|_| perr(e.line, format!("{}: cannot parse {:?}", e.key, e.value)))
}

fn flag(e: &Entry) -> Result<bool, ConfigError> {
    match e.value.as_str() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(perr(e.line, format!("{}: expected a boolean, found {other:?}", e.key))),
    }
}

fn list(e: &Entry) -> Vec<String> {
    e.value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

fn unknown(e: &Entry, scope: &str) -> ConfigError {
    perr(e.line, format!("unknown key {:?} in {scope}", e.key))
}

fn check_unique_keys(entries: &[Entry], scope: &str) -> Result<(), ConfigError> {
    for (i, e) in entries.iter().enumerate() {
        if entries[..i].iter().any(|p| p.key == e.key) {
            return Err(perr(e.line, format!("duplicate key {:?} in {scope}", e.key)));
        }
    }
    Ok(())
}

/// Sections of one indexed kind, sorted by index; indices must be exactly `0..n`.
fn indexed<'a>(sections: &'a [Section], kind: &str) -> Result<Vec<&'a Section>, ConfigError> {
    let mut found: Vec<(usize, &Section)> = Vec::new();
    for s in sections.iter().filter(|s| s.kind == kind) {
        let idx: usize = s
            .id
            .parse()
            .map_err(|_| perr(s.line, format!("[{kind}.{}]: index must be an integer", s.id)))?;
        if found.iter().any(|(i, _)| *i == idx) {
            return Err(perr(s.line, format!("duplicate section [{kind}.{idx}]")));
        }
        found.push((idx, s));
    }
    found.sort_by_key(|(i, _)| *i);
    for (expected, (idx, s)) in found.iter().enumerate() {
        if *idx != expected {
            return Err(perr(
                s.line,
                format!("[{kind}.*] indices must be contiguous from 0; missing {expected}"),
            ));
        }
    }
    Ok(found.into_iter().map(|(_, s)| s).collect())
}

fn named<'a>(sections: &'a [Section], kind: &str) -> Result<Vec<&'a Section>, ConfigError> {
    let out: Vec<&Section> = sections.iter().filter(|s| s.kind == kind).collect();
    for (i, s) in out.iter().enumerate() {
        if s.id.is_empty() {
            return Err(perr(s.line, format!("[{kind}.NAME] needs a name")));
        }
        if out[..i].iter().any(|p| p.id == s.id) {
            return Err(perr(s.line, format!("duplicate section [{kind}.{}]", s.id)));
        }
    }
    Ok(out)
}

fn parse_learning(section: Option<&Section>) -> Result<LearningConfig, ConfigError> {
    let mut l = LearningConfig::default();
    let Some(section) = section else {
        return Ok(l);
    };
    for e in &section.entries {
        match e.key.as_str() {
            "episode_len" => l.episode_len = num(e)?,
            "eval_episodes" => l.eval_episodes = num(e)?,
            "hidden_sizes" => {
                l.hidden_sizes = list(e)
                    .iter()
                    .map(|s| {
                        s.parse()
                            .map_err(|_| perr(e.line, format!("hidden_sizes: bad width {s:?}")))
                    })
                    .collect::<Result<_, _>>()?
            }
            "actor_lr" => l.actor_lr = num(e)?,
            "critic_lr" => l.critic_lr = num(e)?,
            "lr_decay" => l.lr_decay = num(e)?,
            "batch_size" => l.batch_size = num(e)?,
            "replay_capacity" => l.replay_capacity = num(e)?,
            "warmup" => l.warmup = num(e)?,
            "updates_per_step" => l.updates_per_step = num(e)?,
            "temperature" => l.temperature = num(e)?,
            "discount" => l.discount = num(e)?,
            "target_smoothing" => l.target_smoothing = num(e)?,
            "eps_start" => l.eps_start = num(e)?,
            "eps_decay" => l.eps_decay = num(e)?,
            _ => return Err(unknown(e, "[agent]")),
        }
    }
    Ok(l)
}

/// Parses config text and validates the result.
pub fn parse_config(text: &str) -> Result<NetworkConfig, ConfigError> {
    let (top, sections) = split_sections(text)?;
    check_unique_keys(&top, "top level")?;
    for s in &sections {
        check_unique_keys(&s.entries, &format!("[{}.{}]", s.kind, s.id))?;
        match s.kind.as_str() {
            "server" | "vm" | "vnf" | "service" | "user" => {}
            "agent" if s.id.is_empty() => {}
            _ => return Err(perr(s.line, format!("unknown section [{}]", s.kind))),
        }
    }

    let mut cfg = NetworkConfig::default();
    let mut num_users: Option<usize> = None;
    let mut num_servers = DEFAULT_SERVERS;
    let mut vms_per_server = DEFAULT_VMS_PER_SERVER;
    for e in &top {
        match e.key.as_str() {
            "num_bs" => cfg.num_bs = num(e)?,
            "num_users" => num_users = Some(num(e)?),
            "num_subcarriers" => cfg.num_subcarriers = num(e)?,
            "subcarrier_bandwidth" => cfg.subcarrier_bandwidth = num(e)?,
            "max_power_per_bs" => cfg.max_power_per_bs = num(e)?,
            "noise_dbm" => cfg.noise_dbm = num(e)?,
            "area_side" => cfg.area_side = num(e)?,
            "circuit_power_per_bs" => cfg.circuit_power_per_bs = num(e)?,
            "path_loss_intercept" => cfg.path_loss_intercept = num(e)?,
            "path_loss_slope" => cfg.path_loss_slope = num(e)?,
            "min_distance" => cfg.min_distance = num(e)?,
            "mu1" => cfg.mu1 = num(e)?,
            "mu2" => cfg.mu2 = num(e)?,
            "time_unit" => cfg.time_unit = num(e)?,
            "reward_scale" => cfg.reward_scale = num(e)?,
            "q_base" => cfg.q_base = num(e)?,
            "nf_storage" => cfg.nf_storage = Some(num(e)?),
            "c5_interpretation" => {
                cfg.c5_interpretation = C5Interpretation::parse(&e.value).ok_or_else(|| {
                    perr(e.line, format!("c5_interpretation: expected literal|cycles, found {:?}", e.value))
                })?
            }
            "rejection_penalty" => cfg.rejection_penalty = num(e)?,
            "extended_state" => cfg.extended_state = flag(e)?,
            "num_servers" => num_servers = num(e)?,
            "vms_per_server" => vms_per_server = num(e)?,
            _ => return Err(unknown(e, "top level")),
        }
    }

    let vnf_sections = named(&sections, "vnf")?;
    if !vnf_sections.is_empty() {
        cfg.vnf_catalog = vnf_sections
            .iter()
            .map(|s| {
                let mut v = VnfSpec {
                    name: s.id.clone(),
                    pi_user: f64::NAN,
                };
                for e in &s.entries {
                    match e.key.as_str() {
                        "pi_user" => v.pi_user = num(e)?,
                        _ => return Err(unknown(e, &format!("[vnf.{}]", s.id))),
                    }
                }
                Ok(v)
            })
            .collect::<Result<_, ConfigError>>()?;
    } else {
        cfg.vnf_catalog = builtin_vnfs();
    }

    let service_sections = named(&sections, "service")?;
    if !service_sections.is_empty() {
        cfg.services = service_sections
            .iter()
            .map(|s| {
                let mut svc = ServiceSpec {
                    name: s.id.clone(),
                    chain: Vec::new(),
                    latency_max: f64::NAN,
                    rate_min: super::catalog::DEFAULT_RATE_MIN,
                    packet_bits: f64::NAN,
                };
                for e in &s.entries {
                    match e.key.as_str() {
                        "chain" => svc.chain = list(e),
                        "latency_max" => svc.latency_max = num(e)?,
                        "rate_min" => svc.rate_min = num(e)?,
                        "packet_bits" => svc.packet_bits = num(e)?,
                        _ => return Err(unknown(e, &format!("[service.{}]", s.id))),
                    }
                }
                Ok(svc)
            })
            .collect::<Result<_, ConfigError>>()?;
    } else {
        cfg.services = builtin_services();
    }

    let server_sections = indexed(&sections, "server")?;
    if !server_sections.is_empty() {
        cfg.servers = server_sections
            .iter()
            .map(|s| {
                let mut srv = ServerSpec::default();
                for e in &s.entries {
                    match e.key.as_str() {
                        "cpu_capacity" => srv.cpu_capacity = num(e)?,
                        "storage_capacity" => srv.storage_capacity = num(e)?,
                        "power_active_cpu" => srv.power_active_cpu = num(e)?,
                        "power_idle_cpu" => srv.power_idle_cpu = num(e)?,
                        "link_bandwidth" => srv.link_bandwidth = num(e)?,
                        _ => return Err(unknown(e, &format!("[server.{}]", s.id))),
                    }
                }
                Ok(srv)
            })
            .collect::<Result<_, ConfigError>>()?;
    } else {
        cfg.servers = vec![ServerSpec::default(); num_servers];
    }

    let vm_sections = indexed(&sections, "vm")?;
    if !vm_sections.is_empty() {
        let all: Vec<String> = cfg.vnf_catalog.iter().map(|v| v.name.clone()).collect();
        cfg.vms = vm_sections
            .iter()
            .map(|s| {
                let mut vm = VmSpec {
                    host_server: 0,
                    cpu_overhead: 10.0,
                    storage_overhead: 1e6,
                    capability: all.clone(),
                };
                for e in &s.entries {
                    match e.key.as_str() {
                        "host_server" => vm.host_server = num(e)?,
                        "cpu_overhead" => vm.cpu_overhead = num(e)?,
                        "storage_overhead" => vm.storage_overhead = num(e)?,
                        "capability" => vm.capability = list(e),
                        _ => return Err(unknown(e, &format!("[vm.{}]", s.id))),
                    }
                }
                Ok(vm)
            })
            .collect::<Result<_, ConfigError>>()?;
    } else {
        cfg.vms = default_vms(cfg.servers.len(), vms_per_server, &cfg.vnf_catalog);
    }

    let user_sections = indexed(&sections, "user")?;
    if !user_sections.is_empty() {
        cfg.user_requests = user_sections
            .iter()
            .map(|s| {
                let mut req = UserRequest {
                    bs: 0,
                    service: String::new(),
                };
                for e in &s.entries {
                    match e.key.as_str() {
                        "bs" => req.bs = num(e)?,
                        "service" => req.service = e.value.clone(),
                        _ => return Err(unknown(e, &format!("[user.{}]", s.id))),
                    }
                }
                Ok(req)
            })
            .collect::<Result<_, ConfigError>>()?;
        cfg.num_users = num_users.unwrap_or(cfg.user_requests.len());
    } else {
        cfg.num_users = num_users.unwrap_or(cfg.num_users);
        cfg.user_requests = round_robin_requests(cfg.num_users, cfg.num_bs, &cfg.services);
    }

    let agent = sections.iter().find(|s| s.kind == "agent");
    if sections.iter().filter(|s| s.kind == "agent").count() > 1 {
        return Err(perr(agent.map_or(0, |s| s.line), "duplicate [agent] section"));
    }
    cfg.learning = parse_learning(agent)?;

    let violations = validate_config(&cfg);
    if violations.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError::Invalid(violations))
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<NetworkConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text)
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

/// Serialises every field explicitly so that re-parsing yields an equal config.
pub fn to_config_string(cfg: &NetworkConfig) -> String {
    let mut out = String::new();
    // Writing to a String cannot fail.
    let w = &mut out;
    let _ = writeln!(w, "num_bs = {}", cfg.num_bs);
    let _ = writeln!(w, "num_users = {}", cfg.num_users);
    let _ = writeln!(w, "num_subcarriers = {}", cfg.num_subcarriers);
    let _ = writeln!(w, "subcarrier_bandwidth = {}", cfg.subcarrier_bandwidth);
    let _ = writeln!(w, "max_power_per_bs = {}", cfg.max_power_per_bs);
    let _ = writeln!(w, "noise_dbm = {}", cfg.noise_dbm);
    let _ = writeln!(w, "area_side = {}", cfg.area_side);
    let _ = writeln!(w, "circuit_power_per_bs = {}", cfg.circuit_power_per_bs);
    let _ = writeln!(w, "path_loss_intercept = {}", cfg.path_loss_intercept);
    let _ = writeln!(w, "path_loss_slope = {}", cfg.path_loss_slope);
    let _ = writeln!(w, "min_distance = {}", cfg.min_distance);
    let _ = writeln!(w, "mu1 = {}", cfg.mu1);
    let _ = writeln!(w, "mu2 = {}", cfg.mu2);
    let _ = writeln!(w, "time_unit = {}", cfg.time_unit);
    let _ = writeln!(w, "reward_scale = {}", cfg.reward_scale);
    let _ = writeln!(w, "q_base = {}", cfg.q_base);
    if let Some(psi) = cfg.nf_storage {
        let _ = writeln!(w, "nf_storage = {psi}");
    }
    let _ = writeln!(w, "c5_interpretation = {}", cfg.c5_interpretation.as_str());
    let _ = writeln!(w, "rejection_penalty = {}", cfg.rejection_penalty);
    let _ = writeln!(w, "extended_state = {}", cfg.extended_state);

    let l = &cfg.learning;
    let _ = writeln!(w, "\n[agent]");
    let _ = writeln!(w, "episode_len = {}", l.episode_len);
    let _ = writeln!(w, "eval_episodes = {}", l.eval_episodes);
    let _ = writeln!(w, "hidden_sizes = {}", join(&l.hidden_sizes));
    let _ = writeln!(w, "actor_lr = {}", l.actor_lr);
    let _ = writeln!(w, "critic_lr = {}", l.critic_lr);
    let _ = writeln!(w, "lr_decay = {}", l.lr_decay);
    let _ = writeln!(w, "batch_size = {}", l.batch_size);
    let _ = writeln!(w, "replay_capacity = {}", l.replay_capacity);
    let _ = writeln!(w, "warmup = {}", l.warmup);
    let _ = writeln!(w, "updates_per_step = {}", l.updates_per_step);
    let _ = writeln!(w, "temperature = {}", l.temperature);
    let _ = writeln!(w, "discount = {}", l.discount);
    let _ = writeln!(w, "target_smoothing = {}", l.target_smoothing);
    let _ = writeln!(w, "eps_start = {}", l.eps_start);
    let _ = writeln!(w, "eps_decay = {}", l.eps_decay);

    for (n, s) in cfg.servers.iter().enumerate() {
        let _ = writeln!(w, "\n[server.{n}]");
        let _ = writeln!(w, "cpu_capacity = {}", s.cpu_capacity);
        let _ = writeln!(w, "storage_capacity = {}", s.storage_capacity);
        let _ = writeln!(w, "power_active_cpu = {}", s.power_active_cpu);
        let _ = writeln!(w, "power_idle_cpu = {}", s.power_idle_cpu);
        let _ = writeln!(w, "link_bandwidth = {}", s.link_bandwidth);
    }
    for (i, vm) in cfg.vms.iter().enumerate() {
        let _ = writeln!(w, "\n[vm.{i}]");
        let _ = writeln!(w, "host_server = {}", vm.host_server);
        let _ = writeln!(w, "cpu_overhead = {}", vm.cpu_overhead);
        let _ = writeln!(w, "storage_overhead = {}", vm.storage_overhead);
        let _ = writeln!(w, "capability = {}", join(&vm.capability));
    }
    for v in &cfg.vnf_catalog {
        let _ = writeln!(w, "\n[vnf.{}]", v.name);
        let _ = writeln!(w, "pi_user = {}", v.pi_user);
    }
    for s in &cfg.services {
        let _ = writeln!(w, "\n[service.{}]", s.name);
        let _ = writeln!(w, "chain = {}", join(&s.chain));
        let _ = writeln!(w, "latency_max = {}", s.latency_max);
        let _ = writeln!(w, "rate_min = {}", s.rate_min);
        let _ = writeln!(w, "packet_bits = {}", s.packet_bits);
    }
    for (u, req) in cfg.user_requests.iter().enumerate() {
        let _ = writeln!(w, "\n[user.{u}]");
        let _ = writeln!(w, "bs = {}", req.bs);
        let _ = writeln!(w, "service = {}", req.service);
    }
    out
}

pub fn save_config(cfg: &NetworkConfig, path: impl AsRef<Path>) -> Result<(), ConfigError> {
    let path = path.as_ref();
    std::fs::write(path, to_config_string(cfg)).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })
}
