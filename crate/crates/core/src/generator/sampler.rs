//! Rejection sampling of sentence specs under lexical constraints.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::types::*;
use crate::lexicon::{
    AdjectiveEntry, Category, Lexicon, NounEntry, Preposition, VerbEntry, VerbKind,
};

/// Attempts per sentence slot before giving up.
pub(crate) const SLOT_BUDGET: usize = 10_000;

/// Deterministic random stream for one unit of work.
pub(crate) fn stream(seed: u64, parts: &[u64]) -> ChaCha8Rng {
    let mut h = splitmix(seed);
    for p in parts {
        h = splitmix(h ^ splitmix(*p));
    }
    ChaCha8Rng::seed_from_u64(h)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stable 64-bit hash of a label (FNV-1a).
pub(crate) fn label_hash(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Tally of rejected attempts keyed by the constraint that failed.
#[derive(Clone, Debug, Default)]
pub(crate) struct Failures(pub BTreeMap<&'static str, usize>);

impl Failures {
    pub fn hit(&mut self, constraint: &'static str) {
        *self.0.entry(constraint).or_default() += 1;
    }

    pub fn merge(&mut self, other: &Failures) {
        for (k, v) in &other.0 {
            *self.0.entry(k).or_default() += v;
        }
    }

    /// Most frequent failing constraint (ties broken by name).
    pub fn worst(&self) -> Option<&'static str> {
        self.0
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
            .map(|(k, _)| *k)
    }
}

/// Words a prime must keep clear of: the target's content lemmas and
/// everything associated with them.
#[derive(Clone, Debug, Default)]
pub(crate) struct Avoid {
    lemmas: BTreeSet<String>,
    associated: BTreeSet<String>,
}

impl Avoid {
    pub fn new<'s>(lex: &Lexicon, lemmas: impl IntoIterator<Item = &'s String>) -> Self {
        let mut a = Avoid::default();
        a.extend(lex, lemmas);
        a
    }

    pub fn extend<'s>(&mut self, lex: &Lexicon, lemmas: impl IntoIterator<Item = &'s String>) {
        for l in lemmas {
            self.associated
                .extend(lex.associations().neighbours(l).map(str::to_string));
            self.lemmas.insert(l.clone());
        }
    }

    pub fn allows(&self, w: &str) -> bool {
        !self.lemmas.contains(w) && !self.associated.contains(w)
    }

    /// Like `allows`, except that an association with `partner` is
    /// permitted.
    pub fn allows_with_partner(&self, lex: &Lexicon, w: &str, partner: &str) -> bool {
        !self.lemmas.contains(w)
            && lex
                .associations()
                .neighbours(w)
                .all(|n| n == partner || !self.lemmas.contains(n))
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) enum VerbRule<'a> {
    Free,
    Fixed(&'a str),
    Similar(&'a str),
}

#[derive(Clone, Copy, Debug)]
pub(crate) enum NounRule<'a> {
    Free,
    Fixed(&'a str),
    Similar(&'a str),
    Implausible,
}

#[derive(Clone, Copy, Debug)]
pub(crate) enum PrepRule {
    Any,
    Differ(Preposition),
    Same(Preposition),
}

#[derive(Clone, Debug)]
pub(crate) struct Plan<'a> {
    pub construction: Construction,
    pub tense: Tense,
    pub determiner: Determiner,
    pub verb: VerbRule<'a>,
    pub prep: PrepRule,
    pub nouns: [NounRule<'a>; 3],
    /// Make exactly one role noun phrase complex with this shape.
    pub complex: Option<NpShape>,
    pub avoid: Option<&'a Avoid>,
    pub implausible: bool,
    /// Only draw words that have at least one similar partner.
    pub need_partners: bool,
}

impl<'a> Plan<'a> {
    pub fn free(construction: Construction, tense: Tense, determiner: Determiner) -> Self {
        Plan {
            construction,
            tense,
            determiner,
            verb: VerbRule::Free,
            prep: PrepRule::Any,
            nouns: [NounRule::Free; 3],
            complex: None,
            avoid: None,
            implausible: false,
            need_partners: false,
        }
    }
}

fn role_index(r: Role) -> usize {
    match r {
        Role::Agent => 0,
        Role::Patient => 1,
        Role::Recipient => 2,
    }
}

fn role_categories(v: &VerbEntry, r: Role) -> &BTreeSet<Category> {
    match r {
        Role::Agent => &v.agent_categories,
        Role::Patient => &v.patient_categories,
        Role::Recipient => &v.recipient_categories,
    }
}

/// Sampling pools derived from a lexicon.
pub(crate) struct Pools<'a> {
    pub lex: &'a Lexicon,
    transitive: Vec<&'a VerbEntry>,
    ditransitive: Vec<&'a VerbEntry>,
    padding: Vec<&'a VerbEntry>,
    role_nouns: Vec<&'a NounEntry>,
    adjectives: Vec<&'a AdjectiveEntry>,
    with_nouns: Vec<&'a NounEntry>,
    countries: Vec<&'a NounEntry>,
    compatible: HashMap<(&'a str, Role), Vec<&'a NounEntry>>,
    incompatible: HashMap<(&'a str, Role), Vec<&'a NounEntry>>,
    similar: HashMap<&'a str, Vec<&'a str>>,
}

impl<'a> Pools<'a> {
    pub fn new(lex: &'a Lexicon, threshold: Option<f64>) -> Self {
        let transitive: Vec<_> = lex.sampleable_verbs(VerbKind::Transitive).collect();
        let ditransitive: Vec<_> = lex.sampleable_verbs(VerbKind::Ditransitive).collect();
        let role_nouns: Vec<_> = lex.role_nouns().collect();
        let mut compatible = HashMap::new();
        let mut incompatible = HashMap::new();
        for v in transitive.iter().chain(&ditransitive) {
            for r in Role::ALL {
                let cats = role_categories(v, r);
                if cats.is_empty() {
                    continue;
                }
                let (yes, no): (Vec<&NounEntry>, Vec<&NounEntry>) =
                    role_nouns.iter().partition(|n| n.has_any(cats));
                compatible.insert((v.lemma.as_str(), r), yes);
                incompatible.insert((v.lemma.as_str(), r), no);
            }
        }
        let mut similar: HashMap<&str, Vec<&str>> = HashMap::new();
        if let Some(t) = threshold {
            let verb_kind = |w: &str| lex.verb(w).map(|v| v.kind);
            let words = transitive
                .iter()
                .chain(&ditransitive)
                .map(|v| v.lemma.as_str())
                .chain(role_nouns.iter().map(|n| n.lemma.as_str()));
            for w in words {
                let mut partners: Vec<&str> = lex
                    .associations()
                    .neighbours(w)
                    .filter(|p| *p != w && lex.is_sampleable(p))
                    .filter(|p| match verb_kind(w) {
                        Some(k) => verb_kind(p) == Some(k),
                        None => role_nouns.iter().any(|n| n.lemma == *p),
                    })
                    .filter(|p| lex.cosine_similarity(w, p).is_ok_and(|c| c >= t))
                    .collect();
                partners.sort_unstable();
                partners.dedup();
                if !partners.is_empty() {
                    similar.insert(w, partners);
                }
            }
        }
        Pools {
            lex,
            transitive,
            ditransitive,
            padding: lex.sampleable_verbs(VerbKind::IntransitivePadding).collect(),
            role_nouns,
            adjectives: lex.sampleable_adjectives().collect(),
            with_nouns: lex.pp_with_nouns().collect(),
            countries: lex.countries().collect(),
            compatible,
            incompatible,
            similar,
        }
    }

    pub fn similar(&self, w: &str) -> &[&'a str] {
        self.similar.get(w).map(Vec::as_slice).unwrap_or(&[])
    }


    pub fn verbs_for(&self, c: Construction) -> &[&'a VerbEntry] {
        match c {
            Construction::Act | Construction::Pass => &self.transitive,
            Construction::Do | Construction::Po => &self.ditransitive,
            Construction::IntrPad => &self.padding,
        }
    }


    pub fn compatible(&self, verb: &'a str, r: Role) -> &[&'a NounEntry] {
        self.compatible
            .get(&(verb, r))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    fn incompatible(&self, verb: &'a str, r: Role) -> &[&'a NounEntry] {
        self.incompatible
            .get(&(verb, r))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    fn roles(c: Construction) -> &'static [Role] {
        match c {
            Construction::Do | Construction::Po => &Role::ALL,
            _ => &Role::ALL[..2],
        }
    }

    /// Verbs satisfying the plan's word-level rules.
    fn verb_candidates(&self, plan: &Plan, fails: &mut Failures) -> Vec<&'a VerbEntry> {
        let mut pool: Vec<&VerbEntry> = self.verbs_for(plan.construction).to_vec();
        pool.retain(|v| match plan.prep {
            PrepRule::Any => true,
            PrepRule::Differ(p) => v.po_preposition != Some(p),
            PrepRule::Same(p) => v.po_preposition == Some(p),
        });
        if pool.is_empty() {
            fails.hit("preposition_contrast");
            return pool;
        }
        match plan.verb {
            VerbRule::Fixed(w) => {
                pool.retain(|v| v.lemma == w);
                if pool.is_empty() {
                    fails.hit("verb_overlap");
                }
                return pool;
            }
            VerbRule::Similar(t) => {
                let sims = self.similar(t);
                pool.retain(|v| sims.contains(&v.lemma.as_str()));
                if pool.is_empty() {
                    fails.hit("semantic_similarity");
                    return pool;
                }
                if let Some(avoid) = plan.avoid {
                    pool.retain(|v| avoid.allows_with_partner(self.lex, &v.lemma, t));
                }
            }
            VerbRule::Free => {
                if let Some(avoid) = plan.avoid {
                    let has_verbs = !pool.is_empty();
                    pool.retain(|v| avoid.allows(&v.lemma));
                    if has_verbs && pool.is_empty() {
                        fails.hit("association");
                        return pool;
                    }
                }
                if plan.need_partners {
                    pool.retain(|v| !self.similar(&v.lemma).is_empty());
                }
            }
        }
        if pool.is_empty() {
            fails.hit("association");
        }
        pool
    }

    fn noun_candidates(
        &self,
        plan: &Plan,
        verb: &'a VerbEntry,
        role: Role,
        fails: &mut Failures,
    ) -> Vec<&'a NounEntry> {
        let rule = plan.nouns[role_index(role)];
        let base = match rule {
            NounRule::Implausible => self.incompatible(&verb.lemma, role),
            _ if plan.implausible => self.role_nouns.as_slice(),
            _ => self.compatible(&verb.lemma, role),
        };
        if base.is_empty() {
            fails.hit("selectional_restriction");
            return Vec::new();
        }
        let mut pool: Vec<&NounEntry> = match rule {
            NounRule::Fixed(w) => base.iter().copied().filter(|n| n.lemma == w).collect(),
            NounRule::Similar(t) => {
                let sims = self.similar(t);
                base.iter()
                    .copied()
                    .filter(|n| sims.contains(&n.lemma.as_str()))
                    .collect()
            }
            NounRule::Free | NounRule::Implausible => base.to_vec(),
        };
        if pool.is_empty() {
            fails.hit(match rule {
                NounRule::Fixed(_) => "selectional_restriction",
                _ => "semantic_similarity",
            });
            return pool;
        }
        if let Some(avoid) = plan.avoid {
            match rule {
                NounRule::Fixed(_) => {}
                NounRule::Similar(t) => {
                    pool.retain(|n| avoid.allows_with_partner(self.lex, &n.lemma, t))
                }
                _ => pool.retain(|n| avoid.allows(&n.lemma)),
            }
        } else if plan.need_partners {
            pool.retain(|n| !self.similar(&n.lemma).is_empty());
        }
        if pool.is_empty() {
            fails.hit("association");
        }
        pool
    }

    /// Draw one spec satisfying `plan`. `accept` sees the candidate's
    /// content lemmas and may reject it (e.g. to keep primes distinct).
    pub fn sample<R: Rng>(
        &self,
        plan: &Plan,
        rng: &mut R,
        fails: &mut Failures,
        mut accept: impl FnMut(&BTreeSet<String>) -> bool,
    ) -> Option<SentenceSpec> {
        let verbs = self.verb_candidates(plan, fails);
        if verbs.is_empty() {
            return None;
        }
        let roles = Self::roles(plan.construction);
        let mut cache: HashMap<(&str, Role), Vec<&NounEntry>> = HashMap::new();
        for _ in 0..SLOT_BUDGET {
            let verb = *verbs.choose(rng).expect("non-empty");
            let mut chosen: Vec<(Role, &NounEntry)> = Vec::with_capacity(3);
            let mut ok = true;
            for &role in roles {
                let pool = cache
                    .entry((verb.lemma.as_str(), role))
                    .or_insert_with(|| self.noun_candidates(plan, verb, role, fails));
                let free: Vec<&&NounEntry> = pool
                    .iter()
                    .filter(|n| chosen.iter().all(|(_, c)| c.lemma != n.lemma))
                    .collect();
                match free.choose(rng) {
                    Some(n) => chosen.push((role, n)),
                    None => {
                        if !pool.is_empty() {
                            fails.hit("distinct_roles");
                        }
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                continue;
            }
            let mut spec = SentenceSpec {
                construction: plan.construction,
                verb: verb.lemma.clone(),
                tense: plan.tense,
                agent: None,
                patient: None,
                recipient: None,
                pronoun_subject: None,
                auxiliary: None,
                implausible: plan.implausible,
            };
            for (role, n) in &chosen {
                *spec.role_mut(*role) = Some(NounPhraseSpec::simple(&n.lemma, plan.determiner));
            }
            if let Some(shape) = plan.complex {
                let role = *roles.choose(rng).expect("roles");
                if !self.complexify(&mut spec, role, shape, plan, rng) {
                    fails.hit("complexity");
                    continue;
                }
            }
            let lemmas = content_lemmas(&spec);
            if !accept(&lemmas) {
                fails.hit("distinct_primes");
                continue;
            }
            return Some(spec);
        }
        None
    }

    fn complexify<R: Rng>(
        &self,
        spec: &mut SentenceSpec,
        role: Role,
        shape: NpShape,
        plan: &Plan,
        rng: &mut R,
    ) -> bool {
        let used = content_lemmas(spec);
        let allowed = |w: &str| !used.contains(w) && plan.avoid.is_none_or(|a| a.allows(w));
        let head = spec.role(role).expect("role present").noun.clone();
        let head_entry = self.lex.noun(&head).expect("sampled noun");
        let adjective_for = |n: &NounEntry, taken: &[&str], rng: &mut R| -> Option<String> {
            let pool: Vec<&&AdjectiveEntry> = self
                .adjectives
                .iter()
                .filter(|a| n.has_any(&a.compatible_categories))
                .filter(|a| allowed(&a.lemma) && !taken.contains(&a.lemma.as_str()))
                .collect();
            pool.choose(rng).map(|a| a.lemma.clone())
        };
        let mut np = spec.role(role).cloned().expect("role present");
        if matches!(shape, NpShape::Adjective | NpShape::Both) {
            match adjective_for(head_entry, &[], rng) {
                Some(a) => np.adjective = Some(a),
                None => return false,
            }
        }
        if matches!(shape, NpShape::Pp | NpShape::Both) {
            let with: Vec<&&NounEntry> = self.with_nouns.iter().filter(|n| allowed(&n.lemma)).collect();
            let from: Vec<&&NounEntry> = self.countries.iter().filter(|n| allowed(&n.lemma)).collect();
            let use_with = match (with.is_empty(), from.is_empty()) {
                (true, true) => return false,
                (false, true) => true,
                (true, false) => false,
                (false, false) => rng.random_bool(0.5),
            };
            np.pp = Some(if use_with {
                let n = with.choose(rng).expect("non-empty");
                let taken: Vec<&str> = np.adjective.as_deref().into_iter().collect();
                let adjective = if rng.random_bool(0.5) {
                    adjective_for(n, &taken, rng)
                } else {
                    None
                };
                PrepPhrase::With {
                    determiner: plan.determiner,
                    adjective,
                    noun: n.lemma.clone(),
                }
            } else {
                PrepPhrase::From {
                    country: from.choose(rng).expect("non-empty").lemma.clone(),
                }
            });
        }
        *spec.role_mut(role) = Some(np);
        true
    }

    /// Up to `count` distinct padding specs avoiding `avoid`.
    pub fn padding<R: Rng>(
        &self,
        avoid: &Avoid,
        count: usize,
        rng: &mut R,
        fails: &mut Failures,
    ) -> Option<Vec<SentenceSpec>> {
        let verbs: Vec<&&VerbEntry> = self.padding.iter().filter(|v| avoid.allows(&v.lemma)).collect();
        let lex = self.lex;
        if verbs.is_empty() || lex.pronouns().is_empty() || lex.auxiliaries().is_empty() {
            fails.hit("padding_disjoint");
            return None;
        }
        let mut out: Vec<SentenceSpec> = Vec::with_capacity(count);
        for _ in 0..SLOT_BUDGET {
            if out.len() == count {
                break;
            }
            let v = verbs.choose(rng).expect("non-empty");
            let p = lex.pronouns().choose(rng).expect("non-empty");
            let a = lex.auxiliaries().choose(rng).expect("non-empty");
            let spec = super::realize::padding_spec(&v.lemma, p, a);
            if out.contains(&spec) {
                fails.hit("padding_distinct");
                continue;
            }
            out.push(spec);
        }
        (out.len() == count).then_some(out)
    }
}

pub(crate) fn content_lemmas(spec: &SentenceSpec) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    out.insert(spec.verb.clone());
    for (_, np) in spec.roles() {
        out.extend(np.lemmas().into_iter().map(str::to_string));
    }
    out
}

/// Shuffle helper kept here so all randomness goes through one module.
pub(crate) fn shuffle<T, R: Rng>(items: &mut [T], rng: &mut R) {
    items.shuffle(rng);
}

pub(crate) fn role_slot(r: Role) -> usize {
    role_index(r)
}

pub(crate) fn verb_roles(c: Construction) -> &'static [Role] {
    Pools::roles(c)
}
