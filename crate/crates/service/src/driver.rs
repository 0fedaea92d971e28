use std::sync::Arc;
use std::time::Duration;

use tokio::task::JoinHandle;

use crate::node::Node;

/// Background producer: every `interval`, mines one block if anything is
/// pending. Empty blocks are never mined by the driver.
pub fn spawn_mining_driver(node: Arc<Node>, interval: Duration) -> JoinHandle<()> {
    tokio::spawn(async move {
        let mut ticker = tokio::time::interval(interval);
        ticker.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
        ticker.tick().await;
        loop {
            ticker.tick().await;
            if node.chain().read(|l| l.pending_len()) == 0 {
                continue;
            }
            let n = node.clone();
            match tokio::task::spawn_blocking(move || n.mine_once()).await {
                Ok(Ok(block)) => {
                    tracing::info!(number = block.number, txs = block.transactions.len(), "mined block");
                }
                Ok(Err(e)) => tracing::error!(error = %e, "mining failed"),
                Err(e) => tracing::error!(error = %e, "mining task panicked"),
            }
        }
    })
}
