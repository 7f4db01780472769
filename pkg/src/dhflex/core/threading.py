import asyncio
import atexit
import concurrent.futures

_threadPool = None


async def runInThread(func, *args):
    global _threadPool

    if _threadPool is None:
        _threadPool = concurrent.futures.ThreadPoolExecutor()

    loop = asyncio.get_running_loop()
    return await loop.run_in_executor(_threadPool, func, *args)


def parallelMap(func, items, *, jobs: int | None = 1) -> list:
    """Map `func` over `items`, returning results in input order.

    With `jobs` > 1 the work is spread over a process pool, so `func` and the
    items must be picklable.
    """
    items = list(items)
    if not jobs or jobs <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as executor:
        return list(executor.map(func, items))


def shutdownThreadPool():
    global _threadPool

    if _threadPool is not None:
        _threadPool.shutdown()
        _threadPool = None


atexit.register(shutdownThreadPool)
