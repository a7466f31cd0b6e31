from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from app.api.endpoints import pool, bot, metrics, detector, scenarios
from app.core.logging import init_sentry, setup_logging
from app.middleware.logging import AccessLoggingMiddleware
from app.helpers.getters import isDebugMode

app = FastAPI(
    title="Liquidity Lab API",
    description="""
## Concentrated-liquidity simulation lab

Stateless endpoints over the CPMM engine plus scenario runs on the worker.

- **/api/pool**: token amounts, liquidity per tick, liquidity addition, swap boundaries, swaps
- **/api/bot**: JIT attack thresholds and bot value
- **/api/metrics**: W1, mass ratio, r-score, MAPE
- **/api/detector**: sandwich-attack detection over transaction records
- **/api/scenarios**: submit, poll, or run small scenarios inline

Ticks are 1-based. Prices are token B per token A; swap sizes are signed token B
(positive deposits token B into the pool).
    """,
    version="1.0.0"
)

# Initialize logging and error tracking
setup_logging()
init_sentry()

origins = [
    "*"
]

app.add_middleware(
    CORSMiddleware,
    allow_origins=origins,
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

# Access logging stays on outside debug mode
app.add_middleware(AccessLoggingMiddleware, enabled=not isDebugMode())


app.include_router(pool.router, prefix="/api/pool", tags=["pool"])
app.include_router(bot.router, prefix="/api/bot", tags=["bot"])
app.include_router(metrics.router, prefix="/api/metrics", tags=["metrics"])
app.include_router(detector.router, prefix="/api/detector", tags=["detector"])
app.include_router(scenarios.router, prefix="/api/scenarios", tags=["scenarios"])

@app.get("/")
def root():
    return {"message": "Liquidity Lab API. OpenAPI docs at /docs"}


@app.get("/health")
def health():
    return {"status": "ok"}
