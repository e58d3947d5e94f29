#include "ontology.hpp"

#include <array>
#include <cctype>

namespace orderlens::detail {
namespace {

struct Site {
  const char* name;       // as it appears in canonical text
  const char* lay;        // how a patient says it
  const char* complaint;  // site-specific evidence
};

// clang-format off
constexpr std::array<Site, 18> kSites = {{
    {"chest", "lungs", "a cough and tightness in my lungs"},
    {"abdomen", "belly", "cramping pain all over my belly"},
    {"pelvis", "lower belly", "a dull ache deep in my lower belly"},
    {"head", "brain", "pounding headaches that wake me up"},
    {"lumbar spine", "lower back", "aching in my lower back that shoots down my leg"},
    {"cervical spine", "neck", "stiffness in my neck when I turn"},
    {"thoracic spine", "upper back", "pain between my shoulder blades"},
    {"knee", "knee", "my knee keeps swelling and giving out"},
    {"shoulder", "shoulder", "I cannot lift my arm above my shoulder"},
    {"hip", "hip", "a deep pain in my hip when I walk"},
    {"ankle", "ankle", "my ankle rolled and is puffy"},
    {"wrist", "wrist", "my wrist hurts when I grip things"},
    {"hand", "fingers", "my fingers are swollen and stiff"},
    {"foot", "foot", "pain on the top of my foot"},
    {"elbow", "elbow", "my elbow is sore when I straighten it"},
    {"sinuses", "face", "pressure behind my face and cheeks"},
    {"neck soft tissue", "throat", "a lump on the side of my throat"},
    {"kidneys", "flank", "sharp pain in my flank that comes in waves"},
}};
// clang-format on

struct Modality {
  const char* canonical;   // "{site}" substituted
  const char* alias_a;     // "{lay}" substituted
  const char* alias_b;
  const char* indication;  // modality-specific evidence
  const char* purpose;     // "{lay}" substituted
  std::array<int, 18> sites;  // indices into kSites, -1 terminated
};

std::string fill(std::string pattern, const std::string& key, const std::string& value) {
  for (auto pos = pattern.find(key); pos != std::string::npos; pos = pattern.find(key, pos)) {
    pattern.replace(pos, key.size(), value);
    pos += value.size();
  }
  return pattern;
}

void add_imaging(std::vector<OrderSpec>& out) {
  // clang-format off
  const std::array<Modality, 6> modalities = {{
      {"X ray {site}, 2 views", "plain film of the {lay}", "{lay} radiograph",
       "a hard fall last week", "a fracture or dislocation in the {lay}",
       {0, 1, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 2, -1}},
      {"CT {site} with contrast", "cat scan of the {lay} with dye", "contrast scan of the {lay}",
       "a lump that seems to be growing", "a mass or abscess in the {lay}",
       {0, 1, 2, 3, 4, 5, 6, 15, 16, 17, 7, 8, 9, 10, -1}},
      {"CT {site} without contrast", "cat scan of the {lay} without dye", "plain scan of the {lay}",
       "a sudden bad injury in a car crash", "acute bleeding or injury in the {lay}",
       {0, 1, 2, 3, 4, 5, 6, 15, 16, 17, 7, 8, 9, 10, -1}},
      {"MRI {site} with contrast", "magnet scan of the {lay} with dye", "enhanced magnet scan of the {lay}",
       "a history of cancer that worries me", "tumor spread to the {lay}",
       {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 16, 17, -1}},
      {"MRI {site} without contrast", "magnet scan of the {lay} without dye", "plain magnet scan of the {lay}",
       "numbness and tingling that comes and goes", "nerve or ligament damage in the {lay}",
       {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, -1}},
      {"Ultrasound {site}", "sonogram of the {lay}", "{lay} echo scan",
       "a soft swelling that feels like fluid", "fluid or a cyst in the {lay}",
       {1, 2, 16, 17, 7, 8, 9, 10, 11, 12, 13, 14, -1}},
  }};
  // clang-format on
  for (const auto& m : modalities) {
    for (int idx : m.sites) {
      if (idx < 0) break;
      const Site& s = kSites[static_cast<std::size_t>(idx)];
      OrderSpec spec;
      spec.canonical_text = fill(m.canonical, "{site}", s.name);
      spec.category = Category::imaging;
      spec.aliases = {fill(m.alias_a, "{lay}", s.lay), fill(m.alias_b, "{lay}", s.lay)};
      spec.findings = {s.complaint, m.indication,
                       std::string(m.indication) + " and now " + s.complaint};
      spec.purpose = fill(m.purpose, "{lay}", s.lay);
      out.push_back(std::move(spec));
    }
  }
}

struct Row {
  const char* canonical;
  const char* alias;
  const char* f1;
  const char* f2;
  const char* f3;
  const char* purpose;
};

// clang-format off
constexpr Row kLabs[] = {
    {"Complete blood count with differential", "cbc", "feeling tired all the time", "getting sick every few weeks", "looking pale to my family", "anemia or infection"},
    {"Basic metabolic panel", "bmp", "muscle cramps at night", "feeling dizzy when standing", "a very dry mouth", "an electrolyte imbalance"},
    {"Comprehensive metabolic panel", "cmp", "yellowing of my eyes", "swelling in both legs", "loss of appetite for weeks", "liver and kidney function"},
    {"Hemoglobin A1c", "sugar average test", "being thirsty constantly", "peeing all the time", "blurry vision after meals", "long term blood sugar control"},
    {"Lipid panel", "cholesterol check", "a family history of heart attacks", "fatty bumps on my eyelids", "eating fried food every day", "cardiovascular risk"},
    {"Thyroid stimulating hormone", "thyroid level", "feeling cold when others are warm", "my hair thinning out", "weight gain without eating more", "thyroid dysfunction"},
    {"Urinalysis with microscopy", "urinalysis", "burning with urination", "cloudy urine", "needing to pee urgently", "dysuria and possible urinary infection"},
    {"Urine culture", "urine culture", "fever with back pain and painful peeing", "repeated bladder infections", "foul smelling urine", "bacterial growth in the urine"},
    {"Troponin I", "heart enzyme", "crushing pressure in my chest", "pain spreading to my left arm", "sweating with chest pain", "heart muscle injury"},
    {"B type natriuretic peptide", "bnp", "waking up gasping for air", "needing three pillows to sleep", "ankles swelling by evening", "heart failure"},
    {"D dimer", "clot screening test", "a swollen painful calf after a long flight", "sudden sharp pain when breathing in", "a leg that feels warm and tight", "a blood clot"},
    {"Prothrombin time and INR", "inr", "bruising easily on warfarin", "bleeding gums while on blood thinners", "a nosebleed that would not stop", "clotting time on anticoagulation"},
    {"Lipase", "pancreas enzyme", "severe upper belly pain boring into my back", "vomiting after a heavy drinking weekend", "pain worse after greasy meals", "pancreatitis"},
    {"Hepatic function panel", "liver tests", "dark tea colored urine", "itching all over my skin", "pale clay colored stools", "liver injury"},
    {"Ferritin", "iron stores test", "craving ice to chew", "heavy periods for months", "brittle spoon shaped nails", "iron deficiency"},
    {"Vitamin B12 level", "b12 level", "pins and needles in my feet", "a sore smooth tongue", "memory slipping lately", "b12 deficiency"},
    {"Vitamin D 25 hydroxy", "vitamin d level", "aching bones everywhere", "rarely going outside in daylight", "muscle weakness climbing stairs", "vitamin d deficiency"},
    {"Magnesium level", "magnesium", "twitching eyelids", "heart skipping beats", "muscle spasms after days of diarrhea", "low magnesium"},
    {"Blood culture", "blood cultures", "shaking chills with high fever", "fever after a dental procedure", "feeling confused with a fever", "a bloodstream infection"},
    {"Lactic acid", "lactate", "breathing fast with fever", "mottled cold skin", "very low blood pressure readings", "sepsis and poor perfusion"},
    {"C reactive protein", "crp", "joints hot and swollen", "fevers that come and go", "morning stiffness for hours", "systemic inflammation"},
    {"Erythrocyte sedimentation rate", "sed rate", "jaw pain when chewing", "a new headache at my temple", "shoulder and hip stiffness every morning", "inflammatory arteritis"},
    {"Hepatitis C antibody", "hep c screen", "past injection drug use", "a tattoo from an unlicensed shop", "a blood transfusion decades ago", "hepatitis c exposure"},
    {"HIV 1 and 2 antigen antibody", "hiv test", "a new partner without protection", "night sweats and weight loss", "a rash with a flu like illness", "hiv infection"},
    {"Rapid strep test", "strep swab", "a very sore throat without cough", "white patches on my tonsils", "tender glands under my jaw", "strep throat"},
    {"Influenza A and B PCR", "flu swab", "body aches with sudden fever", "everyone at home has the flu", "a dry cough with chills", "influenza"},
    {"SARS CoV 2 PCR", "covid test", "losing my sense of smell", "a coworker tested positive", "fever and cough since the weekend", "covid infection"},
    {"Pregnancy test urine", "pregnancy test", "a missed period", "nausea in the mornings", "breast tenderness", "pregnancy"},
    {"Prostate specific antigen", "psa", "a weak urine stream", "getting up at night to pee", "dribbling after urinating", "prostate disease"},
    {"Uric acid", "uric acid level", "a red hot swollen big toe", "a painful joint after steak and beer", "chalky lumps near my knuckles", "gout"},
    {"Ammonia level", "ammonia", "confusion with known cirrhosis", "hands flapping when held out", "sleeping all day with liver disease", "hepatic encephalopathy"},
    {"Arterial blood gas", "blood gas", "lips turning blue", "breathing very shallow", "extreme drowsiness with lung disease", "oxygenation and acid base status"},
    {"Cortisol morning", "cortisol level", "dark skin patches and salt craving", "a rounded face and purple stretch marks", "weakness with low blood pressure", "adrenal dysfunction"},
    {"Stool occult blood", "stool blood test", "black tarry stools", "blood on the toilet paper", "a change in bowel habits", "gastrointestinal bleeding"},
    {"Stool culture", "stool culture", "watery diarrhea after travel", "bloody diarrhea with cramps", "diarrhea after eating at a buffet", "infectious diarrhea"},
    {"Clostridioides difficile toxin", "c diff test", "diarrhea after finishing antibiotics", "many loose stools a day in the hospital", "foul diarrhea with belly pain", "c difficile colitis"},
    {"Helicobacter pylori breath test", "h pylori breath test", "burning stomach pain between meals", "ulcer symptoms that keep coming back", "feeling full after a few bites", "h pylori infection"},
    {"Celiac disease antibody panel", "celiac screen", "bloating after bread", "diarrhea whenever I eat wheat", "itchy blisters on my elbows", "celiac disease"},
    {"Antinuclear antibody", "ana", "a butterfly rash on my face", "joint pain with mouth sores", "fingers turning white in the cold", "autoimmune disease"},
    {"Rheumatoid factor", "rheumatoid factor", "swollen knuckles on both hands", "hand stiffness every morning", "firm bumps on my forearms", "rheumatoid arthritis"},
    {"Digoxin level", "digoxin level", "seeing yellow halos around lights", "nausea while taking digoxin", "a slow pulse on my heart medicine", "digoxin toxicity"},
    {"Lithium level", "lithium level", "a hand tremor on lithium", "unsteady walking on my mood medicine", "diarrhea since the lithium went up", "lithium toxicity"},
    {"Acetaminophen level", "tylenol level", "took a whole bottle of pain pills", "an overdose on purpose", "right upper belly pain after many tylenol", "acetaminophen overdose"},
    {"Blood alcohol level", "alcohol level", "slurred speech and smelling of alcohol", "found down after a party", "unsteady and drunk", "alcohol intoxication"},
    {"Type and screen", "type and screen", "planned surgery next week", "vomiting blood this morning", "heavy bleeding after delivery", "transfusion preparation"},
};

constexpr Row kProcedures[] = {
    {"Electrocardiogram 12 lead", "ekg", "palpitations right now", "a fainting spell at work", "a racing heartbeat with dizziness", "arrhythmia or ischemia"},
    {"Echocardiogram transthoracic", "heart ultrasound", "a new heart murmur", "getting winded walking to the mailbox", "swollen ankles with fatigue", "heart valve and pump function"},
    {"Colonoscopy", "colonoscopy", "turning fifty with no screening", "blood mixed in my stool", "a father with colon cancer", "colorectal cancer"},
    {"Upper endoscopy", "egd", "trouble swallowing solid food", "heartburn every night for years", "food sticking in my chest", "esophageal and stomach disease"},
    {"Spirometry", "breathing test", "wheezing when I exercise", "a chronic smoker's cough", "getting short of breath on stairs", "asthma or copd"},
    {"Lumbar puncture", "spinal tap", "a stiff neck with fever", "the worst headache of my life", "light hurting my eyes with fever", "meningitis or bleeding"},
    {"Skin biopsy punch", "skin biopsy", "a mole that changed color", "a scaly patch that bleeds", "a sore on my nose that will not heal", "skin cancer"},
    {"Knee joint aspiration", "knee tap", "a hot tense knee full of fluid", "sudden knee swelling without injury", "fever with a swollen knee", "septic or crystal arthritis"},
    {"Incision and drainage of abscess", "i and d", "a painful pus filled bump", "a red swollen boil that is growing", "a tender abscess under my arm", "a skin abscess"},
    {"Laceration repair", "stitches", "a deep cut on my hand", "a gash from a kitchen knife", "a cut that keeps gaping open", "wound closure"},
    {"Cardiac stress test", "treadmill test", "chest pain when climbing stairs", "tightness that eases with rest", "jaw pain during exercise", "coronary artery disease"},
    {"Holter monitor 24 hour", "holter", "palpitations that come and go", "skipped beats a few times a day", "dizzy spells with no pattern", "intermittent arrhythmia"},
    {"Polysomnography sleep study", "sleep study", "loud snoring every night", "my wife says I stop breathing asleep", "exhausted despite a full night of sleep", "obstructive sleep apnea"},
    {"Nerve conduction study", "nerve test", "numbness in my hand at night", "weak grip dropping cups", "burning pain in both feet", "neuropathy or nerve entrapment"},
    {"Physical therapy evaluation", "pt referral", "trouble walking since surgery", "weakness after a fall", "back pain limiting my work", "mobility and strength"},
    {"Cerumen removal", "ear wax removal", "muffled hearing in one ear", "my ear feels plugged", "itching deep in the ear canal", "impacted cerumen"},
    {"Cervical cytology pap smear", "pap test", "being overdue for cervical screening", "bleeding after sex", "an unusual discharge", "cervical dysplasia"},
    {"Screening mammogram bilateral", "mammogram", "turning forty this year", "a sister with breast cancer", "no breast imaging in years", "breast cancer"},
    {"Bone density DXA scan", "bone density scan", "a broken wrist from a minor fall", "losing height over the years", "long term steroid use", "osteoporosis"},
    {"Audiometry", "hearing test", "trouble hearing conversations", "the tv turned up loud", "ringing in both ears", "hearing loss"},
    {"Urinary catheter placement", "foley", "cannot pee at all", "a bladder that feels full and painful", "urine retention after surgery", "urinary retention"},
    {"Nasogastric tube placement", "ng tube", "vomiting that will not stop", "a swollen belly with no gas passing", "feculent vomiting", "bowel obstruction decompression"},
    {"Wound care dressing change", "wound care", "a wound oozing through the bandage", "a dressing soaked since yesterday", "an ulcer on my heel", "wound healing"},
    {"Splint application", "splint", "a swollen wrist after the injury", "cannot move my thumb", "a sprained ankle that needs support", "immobilization of an injury"},
    {"Paracentesis", "belly tap", "a belly full of fluid", "a tight swollen abdomen with cirrhosis", "shortness of breath from abdominal fluid", "ascites"},
    {"Thoracentesis", "chest tap", "fluid around my lung on the last film", "short of breath lying flat with an effusion", "one side of my chest sounds dull", "pleural effusion"},
    {"Electrical cardioversion", "cardioversion", "heart racing irregularly for two days", "atrial fibrillation that will not convert", "lightheaded with a fast irregular pulse", "rhythm restoration"},
    {"Allergy skin testing", "allergy testing", "sneezing every spring", "hives after eating nuts", "itchy eyes around cats", "environmental and food allergy"},
    {"Tuberculin skin test", "tb test", "a new job at a hospital", "night sweats and cough for weeks", "living with someone who has tuberculosis", "tuberculosis exposure"},
    {"Smoking cessation counseling", "quit smoking counseling", "smoking a pack a day", "wanting to quit cigarettes", "cravings that ruin every attempt to stop", "tobacco dependence"},
};

struct Drug {
  const char* name;
  const char* low;
  const char* high;
  const char* form;
  const char* f1;
  const char* f2;
  const char* f3;
  const char* purpose;
};

constexpr Drug kDrugs[] = {
    {"Amoxicillin", "250 mg", "875 mg", "oral", "ear pain", "sinus congestion with green mucus", "throat pain with fever", "bacterial infection"},
    {"Azithromycin", "250 mg", "500 mg", "oral", "productive cough", "chest congestion", "walking pneumonia symptoms", "atypical pneumonia"},
    {"Ceftriaxone", "250 mg", "1 g", "injection", "pelvic discharge", "fever with flank pain", "a spreading skin infection", "serious bacterial infection"},
    {"Nitrofurantoin", "50 mg", "100 mg", "oral", "bladder discomfort", "frequent urination", "pressure above my pubic bone", "bladder infection"},
    {"Ibuprofen", "200 mg", "800 mg", "oral", "sprain pain", "menstrual cramps", "joint soreness", "pain and inflammation"},
    {"Acetaminophen", "325 mg", "1000 mg", "oral", "headache", "fever", "body aches", "pain and fever"},
    {"Ondansetron", "4 mg", "8 mg", "oral dissolving", "nausea", "vomiting", "queasiness after chemo", "nausea control"},
    {"Prednisone", "10 mg", "40 mg", "oral", "asthma flare", "poison ivy rash", "joint inflammation", "inflammation suppression"},
    {"Albuterol", "2 puffs", "4 puffs", "inhaler", "wheezing", "chest tightness", "shortness of breath with colds", "bronchospasm"},
    {"Lisinopril", "10 mg", "40 mg", "oral", "high blood pressure readings", "protein in my urine", "blood pressure creeping up", "hypertension"},
    {"Metformin", "500 mg", "1000 mg", "oral", "high sugars", "prediabetes", "rising glucose readings", "type 2 diabetes"},
    {"Atorvastatin", "10 mg", "80 mg", "oral", "high cholesterol", "plaque in my arteries", "elevated ldl numbers", "lipid lowering"},
    {"Omeprazole", "20 mg", "40 mg", "oral", "heartburn", "acid reflux at night", "sour taste in my mouth", "acid suppression"},
    {"Sertraline", "25 mg", "100 mg", "oral", "low mood", "panic attacks", "worry that keeps me up", "depression and anxiety"},
    {"Furosemide", "20 mg", "80 mg", "oral", "leg swelling", "weight gain from fluid", "breathlessness from fluid", "fluid overload"},
    {"Levothyroxine", "25 mcg", "100 mcg", "oral", "sluggishness", "constipation and cold intolerance", "puffy eyelids", "hypothyroidism"},
    {"Gabapentin", "100 mg", "600 mg", "oral", "nerve pain", "burning in my feet", "shooting pain after shingles", "neuropathic pain"},
    {"Cetirizine", "5 mg", "10 mg", "oral", "itchy watery eyes", "sneezing fits", "a runny nose from pollen", "allergic rhinitis"},
    {"Oseltamivir", "30 mg", "75 mg", "oral", "flu symptoms", "aches with high fever", "a flu exposure at home", "influenza treatment"},
    {"Heparin", "5000 units", "10000 units", "subcutaneous", "immobility in bed", "clot risk after surgery", "a swollen leg vein", "clot prevention"},
    {"Morphine", "2 mg", "4 mg", "intravenous", "pain after the fracture", "kidney stone pain", "pain from the burn", "acute pain control"},
    {"Lorazepam", "0.5 mg", "2 mg", "oral", "anxiety before the procedure", "shakiness from alcohol withdrawal", "agitation", "anxiolysis"},
    {"Insulin glargine", "10 units", "30 units", "subcutaneous", "fasting sugars over two hundred", "an a1c that keeps climbing", "sugars high despite pills", "basal glucose control"},
    {"Doxycycline", "50 mg", "100 mg", "oral", "a tick bite with a bullseye rash", "acne with deep cysts", "a bug bite turning red", "tick borne and skin infection"},
    {"Sumatriptan", "25 mg", "100 mg", "oral", "a throbbing one sided headache", "migraine with flashing lights", "headache with nausea and light sensitivity", "migraine attack"},
};
// clang-format on

void add_rows(std::vector<OrderSpec>& out, const Row* begin, const Row* end, Category cat) {
  for (const Row* r = begin; r != end; ++r) {
    out.push_back({r->canonical, cat, {r->alias}, {r->f1, r->f2, r->f3}, r->purpose});
  }
}

void add_drugs(std::vector<OrderSpec>& out) {
  for (const Drug& d : kDrugs) {
    std::string lower = d.name;
    for (auto& ch : lower) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    for (int dose = 0; dose < 2; ++dose) {
      const std::string strength = dose == 0 ? d.low : d.high;
      const std::string severity = dose == 0 ? "mild " : "severe ";
      OrderSpec spec;
      spec.canonical_text = std::string(d.name) + " " + strength + " " + d.form;
      spec.category = Category::medication;
      spec.aliases = {lower + " " + strength,
                      (dose == 0 ? "low dose " : "high dose ") + lower};
      spec.findings = {severity + d.f1, severity + d.f2, severity + d.f3};
      spec.purpose = severity + d.purpose;
      out.push_back(std::move(spec));
    }
  }
}

}  // namespace

const std::vector<OrderSpec>& builtin_ontology() {
  static const std::vector<OrderSpec> ontology = [] {
    std::vector<OrderSpec> out;
    add_imaging(out);
    add_rows(out, std::begin(kLabs), std::end(kLabs), Category::lab);
    add_drugs(out);
    add_rows(out, std::begin(kProcedures), std::end(kProcedures), Category::procedure);
    return out;
  }();
  return ontology;
}

}  // namespace orderlens::detail
