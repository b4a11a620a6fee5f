# Retries for network calls
DEFAULT_MAX_RETRIES = 3
DEFAULT_BACKOFF_BASE = 2

# Crawling
DEFAULT_POLITENESS_DELAY = 1.0
DEFAULT_USER_AGENT = "wikipaths/0.4 (path extrapolation research crawler)"
WIKIPEDIA_API_URL = "https://en.wikipedia.org/w/api.php"
DEFAULT_NUM_PATHS = 3000
DEFAULT_MIN_LEN = 4
DEFAULT_MAX_LEN = 7
DEFAULT_DENSE_WINDOW = 5
MAX_PATH_ATTEMPTS = 100
INVALID_TITLE_MARKERS = ("Talk", "User", "File", "ISO", "%", "#", ":")

# Categorization
DBPEDIA_SPARQL_URL = "https://dbpedia.org/sparql"
DBPEDIA_RESOURCE_PREFIX = "http://dbpedia.org/resource/"
DBPEDIA_ONTOLOGY_PREFIX = "http://dbpedia.org/ontology/"
SPARQL_TIMEOUT_SECONDS = 10.0
FALLBACK_CATEGORY = "subject.General"
DEFAULT_MAX_IN_FLIGHT = 4

# Dataset layout
DEFAULT_OBSERVED = 4
DEFAULT_SPLIT_RATIOS = (0.8, 0.1, 0.1)
DEFAULT_SPLIT_SEED = 7
DATASET_FILES = (
    "articles.tsv",
    "categories.tsv",
    "edges.tsv",
    "hyperedges.tsv",
    "lengths.tsv",
    "observations.tsv",
    "paths.tsv",
)

# Features
NODE_COLUMNS = ("in_degree", "out_degree")
BASE_EDGE_COLUMNS = ("tfidf", "nof")
DHT_EDGE_COLUMNS = ("sim_hyperedge", "dh_in", "dh_out")

# Model
LIKELIHOOD_EPS = 1e-12
DEFAULT_DIFFUSION_DEPTH = 3
DEFAULT_DECAY = 0.7
DEFAULT_HIDDEN_WIDTHS = (16, 16)
INIT_SCALE = 0.1
PINV_MAX_EDGES = 5000
CHECKPOINT_FORMAT_VERSION = 1

# Training
DEFAULT_LEARNING_RATE = 0.05
DEFAULT_EPOCHS = 200
DEFAULT_PATIENCE = 20
DIVERGENCE_THRESHOLD = 1e6
DEFAULT_CHUNK_SIZE = 64

# Oracle limits
ORACLE_MAX_NODES = 12
ORACLE_MAX_HORIZON = 4
