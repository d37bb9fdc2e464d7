use std::sync::Arc;
use std::time::Duration;

use mmsdr_core::channel::ChannelScene;
use mmsdr_core::plsim::PlConfig;

use crate::client::{ClientResult, NodeClient};
use crate::medium::{Medium, Side};
use crate::server::{serve, NodeConfig, RunningNode};
use crate::NodeError;

/// Two in-process nodes on one medium: the mobile node transmits
/// (side A), the fixed node receives (side B).
pub struct Testbed {
    pub medium: Arc<Medium>,
    pub mobile: RunningNode,
    pub fixed: RunningNode,
}

impl Testbed {
    pub fn start(scene: ChannelScene, pl: PlConfig) -> Result<Self, NodeError> {
        let medium = Medium::new(scene, pl)?;
        let mobile = serve(&NodeConfig::ephemeral("mobile"), medium.clone(), Side::A)?;
        let fixed = serve(&NodeConfig::ephemeral("fixed"), medium.clone(), Side::B)?;
        Ok(Testbed { medium, mobile, fixed })
    }

    /// Clients for (mobile, fixed).
    pub fn connect(&self, io_timeout: Duration) -> ClientResult<(NodeClient, NodeClient)> {
        let m = NodeClient::connect(self.mobile.control_addr(), self.mobile.data_addr(), io_timeout)?;
        let f = NodeClient::connect(self.fixed.control_addr(), self.fixed.data_addr(), io_timeout)?;
        Ok((m, f))
    }
}
