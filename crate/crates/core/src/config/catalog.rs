use super::{ServiceSpec, VnfSpec};

const VNFS: [(&str, f64); 6] = [
    ("NAT", 0.00092),
    ("FW", 0.0009),
    ("TM", 0.0133),
    ("WOC", 0.0054),
    ("IDPS", 0.0107),
    ("VOC", 0.0054),
];

// (name, chain, latency seconds, bandwidth bits/s)
const SERVICES: [(&str, &str, f64, f64); 3] = [
    ("Web Service", "NAT-FW-TM-WOC-IDPS", 0.500, 100e3),
    ("VoIP", "NAT-FW-TM-FW-NAT", 0.100, 64e3),
    ("Video Streaming", "NAT-FW-TM-VOC-IDPS", 0.100, 4e6),
];

/// Minimum downlink rate applied to every built-in service, bits/s/Hz.
pub const DEFAULT_RATE_MIN: f64 = 1.0;

pub fn builtin_vnfs() -> Vec<VnfSpec> {
    VNFS.iter()
        .map(|&(name, pi_user)| VnfSpec {
            name: name.to_string(),
            pi_user,
        })
        .collect()
}

/// Built-in SFCs. Packet size is the bandwidth times a one-second time unit.
pub fn builtin_services() -> Vec<ServiceSpec> {
    SERVICES
        .iter()
        .map(|&(name, chain, latency, bandwidth)| ServiceSpec {
            name: name.to_string(),
            chain: chain.split('-').map(str::to_string).collect(),
            latency_max: latency,
            rate_min: DEFAULT_RATE_MIN,
            packet_bits: bandwidth,
        })
        .collect()
}

pub fn builtin_catalog() -> (Vec<VnfSpec>, Vec<ServiceSpec>) {
    (builtin_vnfs(), builtin_services())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tm_requirement() {
        let (vnfs, _) = builtin_catalog();
        let tm = vnfs.iter().find(|v| v.name == "TM").unwrap();
        assert_eq!(tm.pi_user, 0.0133);
    }

    #[test]
    fn voip_chain() {
        let (_, services) = builtin_catalog();
        let voip = services.iter().find(|s| s.name == "VoIP").unwrap();
        assert_eq!(voip.chain.len(), 5);
        assert_eq!(voip.latency_max, 0.100);
        assert_eq!(voip.packet_bits, 64000.0);
    }

    #[test]
    fn every_chain_resolves() {
        let (vnfs, services) = builtin_catalog();
        for s in &services {
            for f in &s.chain {
                assert!(vnfs.iter().any(|v| &v.name == f), "{f} in {}", s.name);
            }
        }
    }
}
