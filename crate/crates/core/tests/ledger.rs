use std::collections::BTreeMap;

use credchain_core::chain::export::{export_blocks, export_receipts_csv, read_blocks};
use credchain_core::chain::{BlockRejection, NodeFault, WorldState, RECEIPT_CSV_HEADER};
use credchain_core::contract::contract_address;
use credchain_core::{
    compute_fee, Address, CallPayload, ChainConfig, ChainHandle, Hash256, Ledger, RevertReason,
    SimTime, SubmitError, TxLookup, TxRequest, TxStatus, WalletEntry, WeiAmount,
};

fn wallet(seed: u8) -> WalletEntry {
    WalletEntry::from_seed(format!("w{seed}"), &[seed; 32]).unwrap()
}

fn funded_config(wallets: &[&WalletEntry]) -> ChainConfig {
    let mut cfg = ChainConfig { difficulty: 8, ..Default::default() };
    for w in wallets {
        cfg = cfg.with_allocation(w.address(), WeiAmount::from_ether(10));
    }
    cfg
}

fn sign(w: &mut WalletEntry, to: Address, call: &CallPayload, gwei: u64, at: SimTime) -> credchain_core::SignedTransaction {
    w.sign_transaction(TxRequest {
        from: w.address(),
        to,
        payload: call.encode(),
        gas_limit: None,
        gas_price: Some(WeiAmount::from_gwei(gwei)),
        submitted_at: at,
    })
    .unwrap()
}

fn store(h: u8) -> CallPayload {
    CallPayload::StoreHash { cert_hash: Hash256::new([h; 32]), doc_type_code: 1 }
}

const MINER: Address = Address::new([0xee; 20]);

#[test]
fn submit_accepts_and_rejects_duplicates() {
    let mut a = wallet(1);
    let mut ledger = Ledger::new(funded_config(&[&a])).unwrap();
    let tx = sign(&mut a, Address::ZERO, &CallPayload::Deploy, 100, SimTime::ZERO);
    let hash = ledger.submit_transaction(tx.clone()).unwrap();
    assert_eq!(ledger.get_receipt(&hash), TxLookup::Pending);
    assert_eq!(ledger.submit_transaction(tx), Err(SubmitError::DuplicateTransaction));
}

#[test]
fn submit_preconditions() {
    let mut a = wallet(1);
    let mut poor = wallet(2);
    let mut ledger = Ledger::new(funded_config(&[&a])).unwrap();

    let mut forged = sign(&mut a, Address::ZERO, &CallPayload::Deploy, 100, SimTime::ZERO);
    forged.payload = vec![0x03];
    assert_eq!(ledger.submit_transaction(forged), Err(SubmitError::InvalidSignature));

    // Nonce 1 was consumed by the forged attempt, so this one skips nonce 0.
    let gap = sign(&mut a, Address::ZERO, &CallPayload::Deploy, 100, SimTime::ZERO);
    assert_eq!(
        ledger.submit_transaction(gap),
        Err(SubmitError::NonceGap { expected: 0, got: 1 })
    );

    let broke = sign(&mut poor, Address::ZERO, &CallPayload::Deploy, 100, SimTime::ZERO);
    assert_eq!(ledger.submit_transaction(broke), Err(SubmitError::InsufficientBalance));

    a.sync_nonce(0);
    let late = sign(&mut a, Address::ZERO, &CallPayload::Deploy, 100, SimTime::from_secs(5));
    assert_eq!(ledger.submit_transaction(late), Err(SubmitError::FutureTimestamp));
}

#[test]
fn pending_balance_is_reserved_across_transactions() {
    let mut a = wallet(1);
    let cfg = ChainConfig { difficulty: 4, ..Default::default() }
        .with_allocation(a.address(), WeiAmount::from_gwei(4_000_000 * 2));
    let mut ledger = Ledger::new(cfg).unwrap();
    for _ in 0..2 {
        let tx = sign(&mut a, Address::ZERO, &CallPayload::Deploy, 100, SimTime::ZERO);
        ledger.submit_transaction(tx).unwrap();
    }
    let third = sign(&mut a, Address::ZERO, &CallPayload::Deploy, 100, SimTime::ZERO);
    assert_eq!(ledger.submit_transaction(third), Err(SubmitError::InsufficientBalance));
}

#[test]
fn mempool_orders_by_gas_price() {
    let mut a = wallet(1);
    let mut b = wallet(2);
    let mut ledger = Ledger::new(funded_config(&[&a, &b])).unwrap();
    let low = sign(&mut b, Address::ZERO, &CallPayload::Deploy, 100, SimTime::ZERO);
    let high = sign(&mut a, Address::ZERO, &CallPayload::Deploy, 200, SimTime::ZERO);
    ledger.submit_transaction(low).unwrap();
    ledger.submit_transaction(high).unwrap();
    let prices: Vec<u128> = ledger.pending().iter().map(|t| t.gas_price.wei()).collect();
    assert_eq!(prices, [200_000_000_000, 100_000_000_000]);
}

#[test]
fn block_gas_limit_selects_highest_price_first() {
    let mut a = wallet(1);
    let mut b = wallet(2);
    let cfg = ChainConfig { block_gas_limit: 50_000, ..funded_config(&[&a, &b]) };
    let mut ledger = Ledger::new(cfg).unwrap();
    let tx_a = sign(&mut a, Address::ZERO, &CallPayload::Deploy, 200, SimTime::ZERO);
    let tx_b = sign(&mut b, Address::ZERO, &CallPayload::Deploy, 100, SimTime::ZERO);
    let ha = ledger.submit_transaction(tx_a).unwrap();
    let hb = ledger.submit_transaction(tx_b).unwrap();
    let block = ledger.mine_next_block(MINER).unwrap();
    assert_eq!(block.transactions.len(), 1);
    assert_eq!(block.transactions[0].hash(), ha);
    assert_eq!(ledger.get_receipt(&hb), TxLookup::Pending);
    ledger.mine_next_block(MINER).unwrap();
    assert!(matches!(ledger.get_receipt(&hb), TxLookup::Mined(r) if r.block_number == 2));
}

#[test]
fn empty_block_only_pays_the_miner() {
    let a = wallet(1);
    let mut ledger = Ledger::new(funded_config(&[&a])).unwrap();
    let before = WorldState::clone(ledger.state());
    let block = ledger.mine_next_block(MINER).unwrap();
    assert!(block.transactions.is_empty());
    assert_eq!(ledger.account(&MINER).balance, WeiAmount::from_ether(2));
    assert_eq!(ledger.account(&a.address()), before.account(&a.address()));
    assert_eq!(ledger.state().contracts(), before.contracts());
    assert!(block.block_hash.leading_zero_bits() >= 8);
}

#[test]
fn receipts_and_lookup() {
    let mut a = wallet(1);
    let mut ledger = Ledger::new(funded_config(&[&a])).unwrap();
    let tx = sign(&mut a, Address::ZERO, &CallPayload::Deploy, 100, SimTime::ZERO);
    let hash = ledger.submit_transaction(tx).unwrap();
    let block = ledger.mine_next_block(MINER).unwrap();
    let TxLookup::Mined(r) = ledger.get_receipt(&hash) else { panic!("not mined") };
    assert_eq!(r.block_number, 1);
    assert_eq!(r.gas_used, 32_000);
    assert_eq!(r.fee, compute_fee(32_000, WeiAmount::from_gwei(100)).unwrap());
    assert_eq!(r.confirmed_at, block.timestamp);
    assert_eq!(r.confirmation_delay, block.timestamp);
    assert_eq!(ledger.get_receipt(&Hash256::new([7; 32])), TxLookup::Unknown);
}

#[test]
fn deploy_then_registry_calls_through_blocks() {
    let mut admin = wallet(1);
    let mut uni = wallet(2);
    let mut outsider = wallet(3);
    let mut ledger = Ledger::new(funded_config(&[&admin, &uni, &outsider])).unwrap();
    let deploy = sign(&mut admin, Address::ZERO, &CallPayload::Deploy, 100, SimTime::ZERO);
    ledger.submit_transaction(deploy).unwrap();
    ledger.mine_next_block(MINER).unwrap();
    let contract = contract_address(admin.address(), 0);
    let state = ledger.contract(&contract).unwrap();
    assert_eq!(state.owner(), admin.address());
    assert!(state.universities().is_empty() && state.records().is_empty());

    let add = CallPayload::AddUni {
        university: uni.address(),
        name: "University 1".into(),
        country: "SA".into(),
    };
    let now = ledger.now();
    let bad = sign(&mut outsider, contract, &add, 100, now);
    let bad_hash = ledger.submit_transaction(bad).unwrap();
    let good = sign(&mut admin, contract, &add, 100, now);
    ledger.submit_transaction(good).unwrap();
    ledger.mine_next_block(MINER).unwrap();
    let TxLookup::Mined(r) = ledger.get_receipt(&bad_hash) else { panic!() };
    assert_eq!(r.status, TxStatus::Reverted(RevertReason::NotOwner));
    assert_eq!(r.fee, compute_fee(32_000, WeiAmount::from_gwei(100)).unwrap());
    assert!(ledger.contract(&contract).unwrap().is_university(&uni.address()));

    let h = Hash256::new([0x42; 32]);
    let tx = sign(&mut uni, contract, &CallPayload::StoreHash { cert_hash: h, doc_type_code: 2 }, 100, ledger.now());
    ledger.submit_transaction(tx).unwrap();
    assert!(ledger.get_hash(&contract, &h).is_none(), "visible before mining");
    let block = ledger.mine_next_block(MINER).unwrap();
    let rec = ledger.get_hash(&contract, &h).unwrap();
    assert_eq!(rec.issuer, uni.address());
    assert_eq!(rec.stored_at, block.number);
    assert_eq!(rec.block_timestamp, block.timestamp);
    assert_eq!(rec.doc_type_code, 2);
}

fn scripted_run() -> Ledger {
    let mut a = wallet(1);
    let mut b = wallet(2);
    let mut ledger = Ledger::new(funded_config(&[&a, &b])).unwrap();
    for i in 0..6u8 {
        let now = ledger.now();
        let tx = sign(&mut a, Address::ZERO, &CallPayload::Deploy, 100 + i as u64, now);
        ledger.submit_transaction(tx).unwrap();
        let tx = sign(&mut b, Address::new([5; 20]), &store(i), 150, now);
        ledger.submit_transaction(tx).unwrap();
        ledger.mine_next_block(MINER).unwrap();
    }
    ledger
}

#[test]
fn deterministic_block_hashes() {
    let x = scripted_run();
    let y = scripted_run();
    let hx: Vec<Hash256> = x.blocks().map(|b| b.block_hash).collect();
    let hy: Vec<Hash256> = y.blocks().map(|b| b.block_hash).collect();
    assert_eq!(hx, hy);
    let mut ex = Vec::new();
    let mut ey = Vec::new();
    export_blocks(&x, &mut ex).unwrap();
    export_blocks(&y, &mut ey).unwrap();
    assert_eq!(ex, ey);
}

#[test]
fn honest_block_accepted_by_all() {
    let mut a = wallet(1);
    let mut ledger = Ledger::new(funded_config(&[&a])).unwrap();
    let tx = sign(&mut a, Address::ZERO, &CallPayload::Deploy, 100, SimTime::ZERO);
    ledger.submit_transaction(tx).unwrap();
    let block = ledger.produce_block(MINER);
    let tally = ledger.validate_and_accept_with_tally(&block);
    assert!(tally.accepted);
    assert_eq!((tally.approvals, tally.node_count), (5, 5));
    for i in 0..5 {
        assert_eq!(ledger.node_state_root(i), block.state_root);
        assert_eq!(ledger.node_height(i), 1);
    }
}

#[test]
fn corrupted_blocks_rejected_by_all() {
    let mut a = wallet(1);
    let mut ledger = Ledger::new(funded_config(&[&a])).unwrap();
    let tx = sign(&mut a, Address::ZERO, &CallPayload::Deploy, 100, SimTime::ZERO);
    ledger.submit_transaction(tx).unwrap();
    let block = ledger.produce_block(MINER);

    let mut bad_root = block.clone();
    let mut root = *bad_root.state_root.as_bytes();
    root[0] ^= 1;
    bad_root.state_root = Hash256::new(root);
    let tally = ledger.validate_and_accept_with_tally(&bad_root);
    assert_eq!(tally.approvals, 0);
    assert!(!tally.accepted);

    // Re-sealing with the corrupted root still fails re-execution.
    let mut resealed = bad_root.clone();
    resealed.block_hash = resealed.compute_hash();
    let tally = ledger.validate_and_accept_with_tally(&resealed);
    assert_eq!(tally.approvals, 0);

    let mut weak = block.clone();
    let mut n = 0;
    loop {
        weak.pow_nonce = n;
        weak.timestamp = SimTime::from_millis(n + 1);
        weak.block_hash = weak.compute_hash();
        if weak.block_hash.leading_zero_bits() < 8 {
            break;
        }
        n += 1;
    }
    let tally = ledger.validate_and_accept_with_tally(&weak);
    assert_eq!(tally.first_rejection, Some(BlockRejection::InsufficientWork));
    assert_eq!(tally.approvals, 0);

    assert!(ledger.validate_and_accept(&block));
    assert_eq!(ledger.height(), 1);
    // Same block again no longer extends the tip.
    assert!(!ledger.validate_and_accept(&block));
}

#[test]
fn majority_rule_with_faulty_validators() {
    let a = wallet(1);
    let mut ledger = Ledger::new(funded_config(&[&a])).unwrap();
    ledger.set_node_fault(0, NodeFault::RejectAll);
    ledger.set_node_fault(1, NodeFault::RejectAll);
    let tally = {
        let block = ledger.produce_block(MINER);
        ledger.validate_and_accept_with_tally(&block)
    };
    assert_eq!(tally.approvals, 3);
    assert!(tally.accepted);
    // Dissenters are synced to the accepted block.
    assert_eq!(ledger.node_height(0), 1);

    ledger.set_node_fault(2, NodeFault::RejectAll);
    assert!(ledger.mine_next_block(MINER).is_err());
    assert_eq!(ledger.height(), 1);
}

#[test]
fn chain_integrity_and_tx_corruption() {
    let ledger = scripted_run();
    let blocks: Vec<_> = ledger.blocks().cloned().collect();
    for pair in blocks.windows(2) {
        assert_eq!(pair[1].parent_hash, pair[0].block_hash);
        assert_eq!(pair[1].number, pair[0].number + 1);
        assert!(pair[1].timestamp > pair[0].timestamp);
    }
    let mut tampered = blocks[3].clone();
    tampered.transactions[0].gas_price = WeiAmount::from_gwei(1);
    assert_ne!(tampered.compute_hash(), blocks[3].block_hash);
}

#[test]
fn replay_and_export_round_trip() {
    let ledger = scripted_run();
    let mut buf = Vec::new();
    export_blocks(&ledger, &mut buf).unwrap();
    let blocks = read_blocks(buf.as_slice()).unwrap();
    let replayed = Ledger::replay(ledger.config().clone(), &blocks).unwrap();
    let roots = |l: &Ledger| l.blocks().map(|b| b.state_root).collect::<Vec<_>>();
    assert_eq!(roots(&replayed), roots(&ledger));
    assert_eq!(replayed.state_root(), ledger.state_root());
    let mut ra = Vec::new();
    let mut rb = Vec::new();
    export_receipts_csv(&ledger, &mut ra).unwrap();
    export_receipts_csv(&replayed, &mut rb).unwrap();
    assert_eq!(ra, rb);
    let text = String::from_utf8(ra).unwrap();
    assert_eq!(text.lines().next().unwrap(), RECEIPT_CSV_HEADER);
    assert_eq!(text.lines().count(), 1 + 12);

    let mut other_cfg = ledger.config().clone();
    other_cfg.block_reward = WeiAmount::from_ether(3);
    assert!(Ledger::replay(other_cfg, &blocks).is_err());
}

#[test]
fn first_export_line_is_genesis_json() {
    let ledger = scripted_run();
    let mut buf = Vec::new();
    export_blocks(&ledger, &mut buf).unwrap();
    let first: serde_json::Value = serde_json::from_str(std::str::from_utf8(&buf).unwrap().lines().next().unwrap()).unwrap();
    let keys: Vec<&str> = first.as_object().unwrap().keys().map(|k| k.as_str()).collect();
    let mut expected = vec![
        "number", "parent_hash", "timestamp", "difficulty", "pow_nonce", "miner", "transactions",
        "state_root", "block_hash",
    ];
    expected.sort();
    let mut keys = keys;
    keys.sort();
    assert_eq!(keys, expected);
    assert_eq!(first["number"], 0);
}

#[test]
fn conservation_at_every_height() {
    let mut a = wallet(1);
    let mut b = wallet(2);
    let cfg = funded_config(&[&a, &b]);
    let genesis = cfg.genesis_supply().unwrap();
    let mut ledger = Ledger::new(cfg).unwrap();
    for i in 0..8u64 {
        let now = ledger.now();
        let to = b.address();
        let t = sign(&mut a, to, &CallPayload::Transfer { amount: WeiAmount::from_gwei(1_000 * i) }, 100, now);
        ledger.submit_transaction(t).unwrap();
        let t = sign(&mut b, Address::ZERO, &CallPayload::Deploy, 120, now);
        ledger.submit_transaction(t).unwrap();
        ledger.mine_next_block(Address::new([i as u8; 20])).unwrap();
        let expected = WeiAmount::from_wei(genesis.wei() + ledger.config().block_reward.wei() * u128::from(ledger.height()));
        assert_eq!(ledger.state().total_balance().unwrap(), expected);
    }
}

#[test]
fn concurrent_submissions_through_handle() {
    let wallets: Vec<WalletEntry> = (1..=8).map(wallet).collect();
    let refs: Vec<&WalletEntry> = wallets.iter().collect();
    let handle = ChainHandle::new(Ledger::new(funded_config(&refs)).unwrap());
    let threads: Vec<_> = wallets
        .into_iter()
        .map(|mut w| {
            let handle = handle.clone();
            std::thread::spawn(move || {
                for i in 0..3u8 {
                    let tx = sign(&mut w, Address::new([1; 20]), &store(i), 100, SimTime::ZERO);
                    handle.submit(tx).unwrap();
                }
            })
        })
        .collect();
    for t in threads {
        t.join().unwrap();
    }
    assert_eq!(handle.read(|l| l.pending_len()), 24);
    let mut mined = 0;
    while handle.read(|l| l.pending_len()) > 0 {
        mined += handle.mine(MINER).unwrap().transactions.len();
    }
    assert_eq!(mined, 24);
    let receipts: BTreeMap<_, _> = handle.read(|l| l.receipts().map(|r| (r.tx_hash, r.clone())).collect());
    assert_eq!(receipts.len(), 24);
}
