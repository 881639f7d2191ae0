//! Channelized three-tier occupancy map.

use serde::{Deserialize, Serialize};

use crate::band::Band;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Iu,
    Pal,
    Gaa,
}

impl std::fmt::Display for Tier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Tier::Iu => "IU",
            Tier::Pal => "PAL",
            Tier::Gaa => "GAA",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GrantId(pub [u8; 16]);

impl std::fmt::Display for GrantId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

impl std::str::FromStr for GrantId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let v = hex::decode(s).map_err(|_| Error::Decode("grant id hex"))?;
        Ok(Self(
            v.try_into().map_err(|_| Error::Decode("grant id length"))?,
        ))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Occupant {
    Incumbent(GrantId),
    /// A PAL or GAA user, identified by an opaque reference.
    Commercial {
        tier: Tier,
        reference: String,
    },
}

impl Occupant {
    pub fn tier(&self) -> Tier {
        match self {
            Occupant::Incumbent(_) => Tier::Iu,
            Occupant::Commercial { tier, .. } => *tier,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ChannelEntry {
    pub id: usize,
    pub band: Band,
    pub occupant: Option<Occupant>,
    pub since: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Preemption {
    pub channel_id: usize,
    pub displaced: Tier,
    /// `None` when the occupant was evicted.
    pub reassigned_to: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PreemptionReport {
    pub entries: Vec<Preemption>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SpectrumDatabase {
    managed: Band,
    channels: Vec<ChannelEntry>,
}

impl SpectrumDatabase {
    /// Splits `managed` into equal channels of `channel_width_khz`.
    pub fn new(managed: Band, channel_width_khz: u32) -> Result<Self> {
        if channel_width_khz == 0 || managed.width_khz() % channel_width_khz != 0 {
            return Err(Error::Schema(format!(
                "managed band {managed} is not a whole number of {channel_width_khz} kHz channels"
            )));
        }
        let n = (managed.width_khz() / channel_width_khz) as usize;
        let channels = (0..n)
            .map(|i| {
                let lo = managed.f_low_khz + i as u32 * channel_width_khz;
                ChannelEntry {
                    id: i,
                    band: Band::new(lo, lo + channel_width_khz).unwrap(),
                    occupant: None,
                    since: 0,
                }
            })
            .collect();
        Ok(Self { managed, channels })
    }

    pub fn managed(&self) -> Band {
        self.managed
    }

    pub fn channels(&self) -> &[ChannelEntry] {
        &self.channels
    }

    pub fn channel(&self, id: usize) -> Option<&ChannelEntry> {
        self.channels.get(id)
    }

    pub fn within_managed(&self, band: &Band) -> bool {
        self.managed.contains(band)
    }

    /// Channels a band touches.
    pub fn overlapping(&self, band: &Band) -> Vec<usize> {
        self.channels
            .iter()
            .filter(|c| c.band.overlaps(band))
            .map(|c| c.id)
            .collect()
    }

    pub fn occupy_commercial(
        &mut self,
        channel: usize,
        tier: Tier,
        reference: &str,
        now: u64,
    ) -> Result<()> {
        if tier == Tier::Iu {
            return Err(Error::InvalidRequest("incumbents are placed by grants"));
        }
        let c = self
            .channels
            .get_mut(channel)
            .ok_or(Error::BadIndex(channel))?;
        if c.occupant.is_some() {
            return Err(Error::InvalidRequest("channel occupied"));
        }
        c.occupant = Some(Occupant::Commercial {
            tier,
            reference: reference.to_string(),
        });
        c.since = now;
        Ok(())
    }

    pub fn vacate(&mut self, channel: usize) -> Option<Occupant> {
        self.channels
            .get_mut(channel)
            .and_then(|c| c.occupant.take())
    }

    pub(crate) fn set_incumbent(&mut self, channels: &[usize], grant: GrantId, now: u64) {
        for &i in channels {
            let c = &mut self.channels[i];
            debug_assert!(c.occupant.is_none());
            c.occupant = Some(Occupant::Incumbent(grant));
            c.since = now;
        }
    }

    /// Frees every channel held by `grant`; returns how many were freed.
    pub(crate) fn release_incumbent(&mut self, grant: &GrantId) -> usize {
        let mut n = 0;
        for c in &mut self.channels {
            if c.occupant == Some(Occupant::Incumbent(*grant)) {
                c.occupant = None;
                n += 1;
            }
        }
        n
    }

    pub fn incumbent_in(&self, band: &Band) -> bool {
        self.channels
            .iter()
            .any(|c| c.band.overlaps(band) && matches!(c.occupant, Some(Occupant::Incumbent(_))))
    }

    /// Checks the structural invariants: channels tile the managed band in
    /// order, and no commercial user shares a channel with an incumbent band.
    pub fn check_invariants(&self, incumbent_bands: &[Band]) -> std::result::Result<(), String> {
        let mut edge = self.managed.f_low_khz;
        for (i, c) in self.channels.iter().enumerate() {
            if c.id != i || c.band.f_low_khz != edge {
                return Err(format!("channel {i} does not tile the managed band"));
            }
            edge = c.band.f_high_khz;
        }
        if edge != self.managed.f_high_khz {
            return Err("channels do not cover the managed band".into());
        }
        for c in &self.channels {
            if let Some(Occupant::Commercial { tier, .. }) = &c.occupant {
                if incumbent_bands.iter().any(|b| b.overlaps(&c.band)) {
                    return Err(format!(
                        "{tier} on channel {} overlaps an incumbent grant",
                        c.id
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Clears commercial users from every channel overlapping `band`, moving each
/// to the lowest-index free channel outside `band` or evicting it when none
/// is left. Incumbents are never touched. Deterministic in `(band, db)`.
pub fn preempt_overlapping(band: &Band, db: &mut SpectrumDatabase, now: u64) -> PreemptionReport {
    let targets = db.overlapping(band);
    let mut report = PreemptionReport::default();
    for id in targets {
        let displaced = match &db.channels[id].occupant {
            Some(Occupant::Commercial { tier, .. }) => *tier,
            _ => continue,
        };
        let occupant = db.channels[id].occupant.take();
        let free = db
            .channels
            .iter()
            .find(|c| c.occupant.is_none() && !c.band.overlaps(band))
            .map(|c| c.id);
        if let Some(to) = free {
            db.channels[to].occupant = occupant;
            db.channels[to].since = now;
        }
        report.entries.push(Preemption {
            channel_id: id,
            displaced,
            reassigned_to: free,
        });
    }
    report
}
