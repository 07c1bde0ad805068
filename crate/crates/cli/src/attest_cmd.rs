use qpuf_core::attestation::{
    integrity_tag, predict_mismatch, verify_response, verify_tag, AttestationDb, DeviceIdentity,
    MtuRegistry, Role, RtuGateway,
};
use qpuf_core::noise::{builtin_profiles, DeviceProfile};

use crate::exit::{CmdResult, Failure};
use crate::profiles;

/// Idle duration given to the slow variants among the fake-device candidates.
const SLOW_IDLE_US: f64 = 200.0;
/// Oracle bits closer than this to 0.5 are treated as undecided.
const UNDECIDED_MARGIN: f64 = 0.05;

pub struct DemoConfig {
    pub ieds: usize,
    pub threshold: usize,
    pub shots: u64,
    pub seed: u64,
    pub profile: String,
}

#[derive(Clone, Copy, PartialEq)]
enum Expect {
    Accept,
    Reject,
    Either,
}

impl Expect {
    fn from_hd(min_hd: usize, max_hd: usize, threshold: usize) -> Self {
        if max_hd <= threshold {
            Expect::Accept
        } else if min_hd > threshold {
            Expect::Reject
        } else {
            Expect::Either
        }
    }

    fn matches(self, accepted: bool) -> bool {
        match self {
            Expect::Accept => accepted,
            Expect::Reject => !accepted,
            Expect::Either => true,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Expect::Accept => "accept",
            Expect::Reject => "reject",
            Expect::Either => "either",
        }
    }
}

struct Transcript {
    clock: u64,
    mismatches: usize,
}

impl Transcript {
    fn tick(&mut self) -> u64 {
        self.clock += 1;
        self.clock
    }

    fn row(
        &mut self,
        event: &str,
        device: &str,
        hd: Option<usize>,
        accepted: bool,
        expect: Expect,
    ) {
        let ok = expect.matches(accepted);
        if !ok {
            self.mismatches += 1;
        }
        println!(
            "{:>4}  {:<14} {:<28} {:>3}  {:<7} {:<7} {}",
            self.clock,
            event,
            device,
            hd.map_or("-".to_string(), |h| h.to_string()),
            if accepted { "accept" } else { "reject" },
            expect.label(),
            if ok { "ok" } else { "UNEXPECTED" }
        );
    }
}

fn ied_identity(k: usize) -> DeviceIdentity {
    let [.., hi, lo] = (k as u64).to_be_bytes();
    DeviceIdentity::new(vec![0x02, 0x00, 0x5e, 0x10, hi, lo], Role::Ied)
}

fn fake_candidates(genuine: &DeviceProfile) -> Vec<DeviceProfile> {
    builtin_profiles()
        .into_iter()
        .chain(std::iter::once(genuine.clone()))
        .flat_map(|p| {
            let slow = p.with_idle_duration(SLOW_IDLE_US);
            [p, slow]
        })
        .filter(|p| p != genuine)
        .collect()
}

pub fn demo(cfg: DemoConfig) -> CmdResult {
    if cfg.ieds == 0 {
        return Err(Failure::Usage("--ieds must be at least 1".into()));
    }
    if cfg.shots == 0 {
        return Err(Failure::Usage("--shots must be at least 1".into()));
    }
    let profile = profiles::resolve(&cfg.profile)?;
    let (t, shots, seed) = (cfg.threshold, cfg.shots, cfg.seed);
    println!(
        "attestation demo: {} IEDs, profile {}, threshold {t}, {shots} shots, seed {seed}",
        cfg.ieds, profile.name
    );
    println!(
        "{:>4}  {:<14} {:<28} {:>3}  {:<7} {:<7} status",
        "t", "event", "device", "hd", "outcome", "expect"
    );

    let mut log = Transcript {
        clock: 0,
        mismatches: 0,
    };
    let mtu = DeviceIdentity::new(b"mtu-control".to_vec(), Role::Mtu);
    let rtu = DeviceIdentity::new(b"rtu-substation".to_vec(), Role::Rtu);

    let mut registry = MtuRegistry::new(mtu, AttestationDb::in_memory())?;
    let now = log.tick();
    registry.register_rtu(&rtu, &profile, shots, seed, now)?;
    log.row("register rtu", &rtu.hex_id(), None, true, Expect::Accept);
    let now = log.tick();
    let d = registry.authenticate_rtu(&rtu, &profile, t, shots, seed ^ 0x5a5a, now)?;
    log.row(
        "auth rtu",
        &rtu.hex_id(),
        Some(d.hd),
        d.accepted,
        Expect::Accept,
    );

    let mut gw = RtuGateway::new(rtu, profile.clone(), AttestationDb::in_memory())?;
    let ieds: Vec<DeviceIdentity> = (0..cfg.ieds).map(ied_identity).collect();
    for ied in &ieds {
        let now = log.tick();
        let rec = gw.enroll(ied, shots, seed, now)?;
        println!(
            "      enrolled {} challenge {} theta {:.6} response {}",
            ied.hex_id(),
            rec.challenge().init_bits(),
            rec.challenge().theta(),
            rec.response_bits()
        );
    }
    for ied in &ieds {
        let now = log.tick();
        let d = gw.authenticate(ied, t, shots, seed.wrapping_add(1), now)?;
        log.row(
            "auth ied",
            &ied.hex_id(),
            Some(d.hd),
            d.accepted,
            Expect::Accept,
        );
    }

    // field data tagged with the fresh response of the first IED
    let first = gw.db().records()[0].clone();
    let now = log.tick();
    let reading = b"breaker 52-1 closed";
    let tag = integrity_tag(reading, first.response_bits(), now);
    log.row(
        "data tag",
        &first.ied_id,
        None,
        verify_tag(reading, first.response_bits(), &tag),
        Expect::Accept,
    );
    let forged = b"breaker 52-1 opened";
    log.row(
        "forged data",
        &first.ied_id,
        None,
        verify_tag(forged, first.response_bits(), &tag),
        Expect::Reject,
    );

    // tamper: one bit of the stored response flipped
    let mut tampered = first.clone();
    tampered.response.bits = first.response_bits().with_flipped(0);
    let now = log.tick();
    let d = verify_response(&tampered, &profile, t, shots, seed.wrapping_add(2), now)?;
    log.row(
        "tamper",
        &first.ied_id,
        Some(d.hd),
        d.accepted,
        Expect::from_hd(1, 1, t),
    );

    // fake device: the enrolled IED whose response a different profile
    // contradicts most clearly, according to the oracle
    let candidates = fake_candidates(&profile);
    let mut best = None;
    for (i, rec) in gw.db().records().iter().enumerate() {
        for (f, fake) in candidates.iter().enumerate() {
            let m = predict_mismatch(rec, fake, UNDECIDED_MARGIN);
            if m.certain > 0 && best.is_none_or(|(_, _, bm): (usize, usize, f64)| m.max_margin > bm)
            {
                best = Some((i, f, m.max_margin));
            }
        }
    }
    match best {
        Some((i, f, _)) => {
            let fake = &candidates[f];
            let rec = gw.db().records()[i].clone();
            let m = predict_mismatch(&rec, fake, UNDECIDED_MARGIN);
            let now = log.tick();
            let d = gw.authenticate_on(&ieds[i], fake, t, shots, seed.wrapping_add(3), now)?;
            println!(
                "      fake device: {} with idle {} us answering for {}",
                fake.name, fake.idle_duration_us, rec.ied_id
            );
            log.row(
                "fake device",
                &rec.ied_id,
                Some(d.hd),
                d.accepted,
                Expect::from_hd(m.certain, m.certain + m.uncertain, t),
            );
        }
        None => println!(
            "      fake device: no candidate profile contradicts an enrolled response; skipped"
        ),
    }

    let accepted = gw.db().decisions().iter().filter(|d| d.accepted).count();
    println!(
        "summary: {accepted}/{} gateway decisions accepted, {} unexpected outcomes",
        gw.db().decisions().len(),
        log.mismatches
    );
    if log.mismatches > 0 {
        return Err(Failure::Check(format!(
            "{} outcomes differed from expectation",
            log.mismatches
        )));
    }
    Ok(())
}
