use serde::{Deserialize, Serialize};

use crate::inference::ImplLabel;

/// Default configuration shipped by one node implementation (mainnet values).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImplDefaults {
    pub cltv_expiry_delta: u32,
    pub min_final_cltv_expiry: u32,
    pub locktime_max: u32,
    pub max_concurrent_htlcs: u32,
    pub dust_limit_satoshis: u64,
    pub htlc_minimum_msat: u64,
    pub fee_base_msat: u64,
    pub fee_proportional_millionths: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefaultsTable {
    pub lnd: ImplDefaults,
    pub clightning: ImplDefaults,
    pub eclair: ImplDefaults,
}

impl DefaultsTable {
    /// Mainnet defaults of LND, C-Lightning and Eclair.
    pub const fn mainnet() -> Self {
        Self {
            lnd: ImplDefaults {
                cltv_expiry_delta: 40,
                min_final_cltv_expiry: 40,
                locktime_max: 2016,
                max_concurrent_htlcs: 483,
                dust_limit_satoshis: 573,
                htlc_minimum_msat: 1000,
                fee_base_msat: 1000,
                fee_proportional_millionths: 1,
            },
            clightning: ImplDefaults {
                cltv_expiry_delta: 14,
                min_final_cltv_expiry: 10,
                locktime_max: 2016,
                max_concurrent_htlcs: 30,
                dust_limit_satoshis: 546,
                htlc_minimum_msat: 1000,
                fee_base_msat: 1000,
                fee_proportional_millionths: 10,
            },
            eclair: ImplDefaults {
                cltv_expiry_delta: 144,
                min_final_cltv_expiry: 9,
                locktime_max: 2016,
                max_concurrent_htlcs: 30,
                dust_limit_satoshis: 546,
                htlc_minimum_msat: 1,
                fee_base_msat: 1000,
                fee_proportional_millionths: 100,
            },
        }
    }

    pub fn get(&self, label: ImplLabel) -> &ImplDefaults {
        match label {
            ImplLabel::Lnd => &self.lnd,
            ImplLabel::CLightning => &self.clightning,
            ImplLabel::Eclair => &self.eclair,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (ImplLabel, &ImplDefaults)> {
        ImplLabel::ALL.into_iter().map(move |l| (l, self.get(l)))
    }
}

impl Default for DefaultsTable {
    fn default() -> Self {
        Self::mainnet()
    }
}

impl ImplDefaults {
    /// The channel policy a node running these defaults announces.
    pub fn policy(&self) -> super::ChannelPolicy {
        super::ChannelPolicy::new(
            self.cltv_expiry_delta,
            self.htlc_minimum_msat,
            self.fee_base_msat,
            self.fee_proportional_millionths,
        )
    }
}
