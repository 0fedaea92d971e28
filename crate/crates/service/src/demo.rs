//! Seeded demo scenario: six universities with five students each, one or
//! two documents per student, mined to completion, one share link per
//! student, and every upload verified.
//!
//! The demo never reads the wall clock, so a fixed seed yields byte-identical
//! data directories.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use credchain_core::{ChainConfig, Hash256};
use credchain_store::{FixedClock, NewStudent, Principal, Role};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::ServiceError;
use crate::node::{InitParams, Node, NodeOptions};

pub const DEMO_UNIVERSITIES: usize = 6;
pub const DEMO_STUDENTS_PER_UNIVERSITY: usize = 5;
/// Off-chain timestamps for the whole run.
pub const DEMO_EPOCH: u64 = 1_700_000_000;
pub const DEMO_ADMIN_EMAIL: &str = "admin@demo.credchain";
pub const DEMO_PASSWORD: &str = "demo-password";
pub const DEMO_DOC_TYPES: [&str; 4] = ["Bachelor Degree", "Master Degree", "Transcript", "Diploma Supplement"];

const COUNTRIES: [&str; DEMO_UNIVERSITIES] = ["Jordan", "Germany", "Canada", "Japan", "Brazil", "Kenya"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DemoDocument {
    pub doc_id: String,
    pub student_id: String,
    pub issuer_name: String,
    pub doc_type: String,
    pub digest: Hash256,
    pub bytes: Vec<u8>,
}

#[derive(Debug)]
pub struct DemoReport {
    pub node: Node,
    pub universities: usize,
    pub students: usize,
    pub documents: Vec<DemoDocument>,
    pub share_urls: Vec<String>,
    /// Uploads whose digest verifies with the issuing university's name.
    pub verified: usize,
}

/// Deterministic document body; unique per (student, type).
fn document_bytes(university: &str, student_id: &str, student_name: &str, doc_type: &str, year: u32) -> Vec<u8> {
    format!(
        "CERTIFICATE\nissuer: {university}\nholder: {student_name} ({student_id})\ntype: {doc_type}\nyear: {year}\n"
    )
    .into_bytes()
}

/// Runs the scenario in a fresh `dir`, writing one line per event to `out`.
pub fn run_demo(
    dir: &Path,
    seed: Option<u64>,
    chain: ChainConfig,
    out: &mut dyn Write,
) -> Result<DemoReport, ServiceError> {
    let clock = Arc::new(FixedClock::new(DEMO_EPOCH));
    let node = Node::init(
        dir,
        InitParams {
            chain,
            seed,
            admin_email: DEMO_ADMIN_EMAIL.into(),
            admin_password: DEMO_PASSWORD.into(),
        },
        NodeOptions { clock, ..NodeOptions::default() },
    )?;
    let mut rng = match seed {
        Some(seed) => ChaCha20Rng::seed_from_u64(seed ^ 0xdead_beef),
        None => ChaCha20Rng::from_os_rng(),
    };
    for name in DEMO_DOC_TYPES {
        node.add_doc_type(name)?;
    }
    writeln!(out, "admin {} contract {}", node.admin_address(), node.contract())?;

    let mut universities = Vec::new();
    for (i, country) in COUNTRIES.iter().enumerate() {
        let name = format!("University {}", i + 1);
        let added = node.add_university(&name, country, &format!("registrar@university{}.edu", i + 1), DEMO_PASSWORD)?;
        writeln!(out, "university {} {} {name}", added.university_id, added.address)?;
        universities.push((added.university_id, name));
    }
    node.mine_until_idle()?;

    let mut students = Vec::new();
    for (u, (university_id, university_name)) in universities.iter().enumerate() {
        for s in 0..DEMO_STUDENTS_PER_UNIVERSITY {
            let name = format!("Student {}-{}", u + 1, s + 1);
            let profile = node.register_student(NewStudent {
                name: name.clone(),
                email: format!("student{}.{}@university{}.edu", u + 1, s + 1, u + 1),
                password: DEMO_PASSWORD.into(),
                university_id: university_id.clone(),
            })?;
            writeln!(out, "student {} {university_id} {}", profile.student_id, profile.email)?;
            students.push((profile, university_id.clone(), university_name.clone()));
        }
    }

    let mut documents = Vec::new();
    for (profile, university_id, university_name) in &students {
        let issuer = Principal { user_id: university_id.clone(), role: Role::University };
        let count = rng.random_range(1..=2usize);
        let first = rng.random_range(0..DEMO_DOC_TYPES.len());
        for k in 0..count {
            let doc_type = DEMO_DOC_TYPES[(first + k) % DEMO_DOC_TYPES.len()];
            let year = rng.random_range(2015..=2024u32);
            let bytes = document_bytes(university_name, &profile.student_id, &profile.name, doc_type, year);
            let uploaded = node.upload_document(&issuer, &profile.student_id, doc_type, &bytes)?;
            documents.push(DemoDocument {
                doc_id: uploaded.doc_id,
                student_id: profile.student_id.clone(),
                issuer_name: university_name.clone(),
                doc_type: doc_type.into(),
                digest: uploaded.file_digest,
                bytes,
            });
        }
    }
    node.mine_until_idle()?;

    let mut verified = 0;
    for doc in &documents {
        let result = node.verify(&doc.digest);
        let ok = result.verified
            && result.issuer_name.as_deref() == Some(doc.issuer_name.as_str())
            && result.doc_type.as_deref() == Some(doc.doc_type.as_str());
        verified += usize::from(ok);
        writeln!(
            out,
            "document {} {} {} block={} verified={ok}",
            doc.doc_id,
            doc.student_id,
            doc.digest,
            result.stored_at_block.map_or_else(|| "-".into(), |b| b.to_string()),
        )?;
    }

    let mut share_urls = Vec::new();
    for (i, (profile, _, _)) in students.iter().enumerate() {
        let Some(doc) = documents.iter().find(|d| d.student_id == profile.student_id) else { continue };
        let owner = Principal { user_id: profile.student_id.clone(), role: Role::Student };
        let share = node.share_document(&owner, &doc.doc_id, &format!("hr{}@employer.example", i + 1), None)?;
        writeln!(out, "share {} {}", profile.student_id, share.url)?;
        share_urls.push(share.url);
    }

    let summary = node.chain_summary();
    writeln!(
        out,
        "summary universities={} students={} documents={} verified={verified} height={} tip={}",
        universities.len(),
        students.len(),
        documents.len(),
        summary.height,
        summary.tip_hash,
    )?;
    Ok(DemoReport {
        universities: universities.len(),
        students: students.len(),
        documents,
        share_urls,
        verified,
        node,
    })
}
