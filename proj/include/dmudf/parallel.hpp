#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace dmudf
{
    /// Number of workers to use when the caller passes 0.
    inline unsigned default_thread_count()
    {
        const unsigned hw = std::thread::hardware_concurrency();
        return hw == 0 ? 1u : hw;
    }

    /// Runs body(begin, end) over [0, count) split into contiguous chunks, one
    /// per worker. Chunk boundaries depend on the thread count, so bodies must
    /// write results by index for output to be schedule independent. The first
    /// exception thrown by any worker is rethrown on the calling thread.
    template<class Body>
    void parallel_for_chunks(std::size_t count, unsigned threads, Body&& body)
    {
        if (count == 0)
            return;
        if (threads == 0)
            threads = default_thread_count();
        const std::size_t workers = std::min<std::size_t>(threads, count);
        if (workers <= 1)
        {
            body(std::size_t{0}, count);
            return;
        }

        std::exception_ptr error;
        std::mutex error_mutex;
        std::vector<std::thread> pool;
        pool.reserve(workers);
        const std::size_t chunk = (count + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w)
        {
            const std::size_t begin = w * chunk;
            const std::size_t end = std::min(count, begin + chunk);
            if (begin >= end)
                break;
            pool.emplace_back([&, begin, end] {
                try
                {
                    body(begin, end);
                }
                catch (...)
                {
                    std::lock_guard lock(error_mutex);
                    if (!error)
                        error = std::current_exception();
                }
            });
        }
        for (auto& t : pool)
            t.join();
        if (error)
            std::rethrow_exception(error);
    }

    template<class Body>
    void parallel_for(std::size_t count, unsigned threads, Body&& body)
    {
        parallel_for_chunks(count, threads, [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i)
                body(i);
        });
    }
}
